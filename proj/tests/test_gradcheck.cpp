#include <doctest.h>

#include "gradcheck.hpp"
#include "phaseseg/kernels.hpp"
#include "phaseseg/ops.hpp"
#include "phaseseg/rng.hpp"

using namespace phaseseg;

namespace {
constexpr double kTol = 1e-4;
}

TEST_SUITE("gradcheck") {

TEST_CASE("matmul gradient vs finite differences") {
    Rng rng(100);
    auto a = Tensor::uniform({4, 3}, rng, -1.0, 1.0, true);
    auto b = Tensor::uniform({3, 2}, rng, -1.0, 1.0, true);
    const auto r = gradcheck::check({a, b}, [&] { return sum(matmul(a, b)); });
    CHECK(r.max_rel_err < kTol);
}

TEST_CASE("linear gradient") {
    Rng rng(101);
    auto x = Tensor::uniform({5, 3}, rng, -1.0, 1.0, true);
    auto w = Tensor::uniform({3, 4}, rng, -1.0, 1.0, true);
    auto b = Tensor::uniform({4}, rng, -0.5, 0.5, true);
    // square the output so the gradient depends on the values, not just ones
    const auto r = gradcheck::check({x, w, b}, [&] {
        auto y = linear(x, w, b);
        return sum(relu(y));
    });
    CHECK(r.max_rel_err < kTol);
}

TEST_CASE("conv gradient, several dilations") {
    for (int dil : {1, 2, 3}) {
        Rng rng(200 + dil);
        auto x = Tensor::uniform({16, 3}, rng, -1.0, 1.0, true);
        auto w = Tensor::uniform({3, 3, 2}, rng, -0.7, 0.7, true);
        auto b = Tensor::uniform({2}, rng, -0.3, 0.3, true);
        const auto r = gradcheck::check({x, w, b}, [&] {
            auto y = causal_dilated_conv1d(x, w, b, dil);
            return sum(relu(y));
        });
        CHECK(r.max_rel_err < kTol);
    }
}

TEST_CASE("softmax gradient, random 3-vector and 2-D axes") {
    Rng rng(300);
    auto x = Tensor::uniform({3}, rng, -2.0, 2.0, true);
    auto probe = Tensor::uniform({3}, rng, -1.0, 1.0, false);
    auto r = gradcheck::check({x}, [&] {
        // weighted sum so off-diagonal softmax jacobian terms matter
        auto mixed = add(softmax(x, 0), probe);
        return sum(relu(mixed));
    });
    CHECK(r.max_rel_err < kTol);

    auto x2 = Tensor::uniform({4, 3}, rng, -2.0, 2.0, true);
    auto probe2 = Tensor::uniform({4, 3}, rng, -1.0, 1.0, false);
    for (int axis : {0, 1}) {
        const auto r2 = gradcheck::check({x2}, [&] { return sum(relu(add(softmax(x2, axis), probe2))); });
        CHECK(r2.max_rel_err < kTol);
    }
}

TEST_CASE("windowed attention gradient, T not a multiple of the window") {
    for (int window : {1, 2, 4}) {
        Rng rng(400 + window);
        auto q = Tensor::uniform({7, 3}, rng, -1.0, 1.0, true);
        auto k = Tensor::uniform({7, 3}, rng, -1.0, 1.0, true);
        auto v = Tensor::uniform({7, 3}, rng, -1.0, 1.0, true);
        const auto r = gradcheck::check({q, k, v}, [&] {
            auto y = windowed_causal_attention(q, k, v, window);
            return sum(relu(y));
        });
        CHECK(r.max_rel_err < kTol);
    }
}

TEST_CASE("cross entropy gradient") {
    Rng rng(500);
    auto logits = Tensor::uniform({5, 3}, rng, -2.0, 2.0, true);
    const std::vector<int> labels = {0, 2, 1, 1, 0};
    const auto r = gradcheck::check({logits}, [&] { return cross_entropy_mean(logits, labels); });
    CHECK(r.max_rel_err < kTol);
}

TEST_CASE("smoothing loss gradient with both-sided flow") {
    Rng rng(600);
    auto logits = Tensor::uniform({6, 3}, rng, -1.5, 1.5, true);
    const auto r = gradcheck::check({logits}, [&] { return smoothing_loss_op(logits, 16.0, false); });
    CHECK(r.max_rel_err < kTol);
}

TEST_CASE("smoothing loss with stopped t-1 gradient matches the frozen-side oracle") {
    // With stop_prev the analytic gradient intentionally differs from the
    // derivative of the plain scalar function; compare instead against finite
    // differences of f(x) with the t-1 log-softmax frozen at the base point.
    Rng rng(601);
    auto logits = Tensor::uniform({6, 3}, rng, -1.5, 1.5, true);
    const int T = 6, C = 3;

    auto frozen = [&](const std::vector<double>& base) {
        std::vector<double> ls0(T * C);
        for (int t = 0; t < T; ++t) kernels::log_softmax_row(base.data() + t * C, C, ls0.data() + t * C);
        return [ls0, T, C](const std::vector<double>& x) {
            std::vector<double> ls(T * C);
            for (int t = 0; t < T; ++t) kernels::log_softmax_row(x.data() + t * C, C, ls.data() + t * C);
            double total = 0.0;
            for (int t = 1; t < T; ++t)
                for (int c = 0; c < C; ++c) {
                    const double d = ls[t * C + c] - ls0[(t - 1) * C + c];
                    total += std::min(d * d, 16.0);
                }
            return total / (T * C);
        };
    };

    logits->zero_grad();
    auto loss = smoothing_loss_op(logits, 16.0, true);
    loss->backward();

    const auto f = frozen(logits->data);
    const double eps = 1e-5;
    double max_err = 0.0;
    for (std::size_t j = 0; j < logits->data.size(); ++j) {
        std::vector<double> xp = logits->data, xm = logits->data;
        xp[j] += eps;
        xm[j] -= eps;
        const double fd = (f(xp) - f(xm)) / (2 * eps);
        max_err = std::max(max_err, gradcheck::rel_err(fd, logits->grad[j]));
    }
    CHECK(max_err < kTol);
}

}  // TEST_SUITE
