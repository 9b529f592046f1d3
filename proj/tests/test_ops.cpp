#include <doctest.h>

#include <cmath>

#include "phaseseg/kernels.hpp"
#include "phaseseg/ops.hpp"
#include "phaseseg/rng.hpp"

using namespace phaseseg;

TEST_SUITE("ops") {

TEST_CASE("matmul identity") {
    auto i2 = Tensor::from_data({2, 2}, {1.0, 0.0, 0.0, 1.0});
    auto y = matmul(i2, i2);
    CHECK(y->data == std::vector<double>{1.0, 0.0, 0.0, 1.0});
}

TEST_CASE("matmul hand case") {
    auto a = Tensor::from_data({2, 2}, {1.0, 2.0, 3.0, 4.0});
    auto b = Tensor::from_data({2, 1}, {1.0, 1.0});
    auto y = matmul(a, b);
    CHECK(y->shape == std::vector<int>{2, 1});
    CHECK(y->data[0] == doctest::Approx(3.0));
    CHECK(y->data[1] == doctest::Approx(7.0));
}

TEST_CASE("matmul shape mismatch") {
    auto a = Tensor::create({2, 3});
    auto b = Tensor::create({2, 2});
    CHECK_THROWS_AS(matmul(a, b), DimensionError);
}

TEST_CASE("linear matches matmul plus bias bitwise") {
    Rng rng(5);
    auto x = Tensor::uniform({7, 4}, rng, -2.0, 2.0);
    auto w = Tensor::uniform({4, 3}, rng, -1.0, 1.0);
    auto b = Tensor::uniform({3}, rng, -1.0, 1.0);
    auto via_linear = linear(x, w, b);
    auto mm = matmul(x, w);
    // same accumulation order: bias first, then ascending input index
    for (int t = 0; t < 7; ++t)
        for (int j = 0; j < 3; ++j) {
            double expect = b->data[j];
            for (int i = 0; i < 4; ++i) expect += x->at(t, i) * w->at(i, j);
            CHECK(via_linear->at(t, j) == expect);
        }
    CHECK(mm->shape == std::vector<int>{7, 3});
}

TEST_CASE("softmax uniform logits") {
    auto x = Tensor::from_data({2}, {0.0, 0.0});
    auto y = softmax(x, 0);
    CHECK(y->data[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(y->data[1] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("softmax is overflow-safe") {
    auto x = Tensor::from_data({2}, {1000.0, 0.0});
    auto y = softmax(x, 0);
    CHECK(y->all_finite());
    CHECK(y->data[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(y->data[1] == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("softmax rows sum to one") {
    Rng rng(9);
    auto x = Tensor::uniform({5, 7}, rng, -4.0, 4.0);
    auto y = softmax(x, 1);
    for (int t = 0; t < 5; ++t) {
        double s = 0.0;
        for (int c = 0; c < 7; ++c) {
            CHECK(y->at(t, c) > 0.0);
            CHECK(y->at(t, c) < 1.0);
            s += y->at(t, c);
        }
        CHECK(std::fabs(s - 1.0) < 1e-9);
    }
}

TEST_CASE("softmax along axis 0 matches transposed axis 1") {
    Rng rng(10);
    auto x = Tensor::uniform({4, 3}, rng, -2.0, 2.0);
    auto y0 = softmax(x, 0);
    std::vector<double> col(4);
    for (int c = 0; c < 3; ++c) {
        double s = 0.0;
        for (int r = 0; r < 4; ++r) s += y0->at(r, c);
        CHECK(std::fabs(s - 1.0) < 1e-9);
        (void)col;
    }
    CHECK_THROWS_AS(softmax(x, 2), ParameterError);
}

TEST_CASE("conv impulse response lands on t0, t0+dil, t0+2*dil") {
    const int T = 12, t0 = 3;
    auto x = Tensor::create({T, 1});
    x->at(t0, 0) = 1.0;
    auto w = Tensor::from_data({3, 1, 1}, {1.0, 1.0, 1.0});
    auto y = causal_dilated_conv1d(x, w, nullptr, 2);
    for (int t = 0; t < T; ++t) {
        const bool hit = (t == t0 || t == t0 + 2 || t == t0 + 4);
        CHECK(y->at(t, 0) == (hit ? 1.0 : 0.0));
    }
}

TEST_CASE("conv of zero input is zero with zero bias") {
    auto x = Tensor::create({9, 3});
    Rng rng(2);
    auto w = Tensor::uniform({3, 3, 2}, rng, -1.0, 1.0);
    auto y = causal_dilated_conv1d(x, w, nullptr, 4);
    for (double v : y->data) CHECK(v == 0.0);
}

TEST_CASE("conv rejects dilation < 1") {
    auto x = Tensor::create({4, 1});
    auto w = Tensor::create({3, 1, 1});
    CHECK_THROWS_AS(causal_dilated_conv1d(x, w, nullptr, 0), ParameterError);
}

TEST_CASE("attention span follows the window schedule") {
    int ks, ke;
    // window 1: keys are {t-1, t}
    kernels::attention_span(5, 1, &ks, &ke);
    CHECK(ks == 4);
    CHECK(ke == 6);
    kernels::attention_span(0, 1, &ks, &ke);
    CHECK(ks == 0);
    CHECK(ke == 1);
    // window 4, t=9: window [8,12), previous window starts at 4
    kernels::attention_span(9, 4, &ks, &ke);
    CHECK(ks == 4);
    CHECK(ke == 10);
}

TEST_CASE("attention output is causal") {
    Rng rng(21);
    const int T = 16, d = 4;
    auto q = Tensor::uniform({T, d}, rng, -1.0, 1.0);
    auto k = Tensor::uniform({T, d}, rng, -1.0, 1.0);
    auto v = Tensor::uniform({T, d}, rng, -1.0, 1.0);
    auto y1 = windowed_causal_attention(q, k, v, 4);
    // perturb the future of k and v beyond frame 9
    auto k2 = Tensor::from_data(k->shape, k->data);
    auto v2 = Tensor::from_data(v->shape, v->data);
    for (int t = 10; t < T; ++t)
        for (int j = 0; j < d; ++j) {
            k2->at(t, j) += 3.0;
            v2->at(t, j) -= 5.0;
        }
    auto y2 = windowed_causal_attention(q, k2, v2, 4);
    for (int t = 0; t <= 9; ++t)
        for (int j = 0; j < d; ++j) CHECK(y1->at(t, j) == y2->at(t, j));
}

TEST_CASE("cross entropy rejects bad labels") {
    auto logits = Tensor::create({3, 2});
    CHECK_THROWS_AS(cross_entropy_mean(logits, {0, 1, 2}), DataError);
    CHECK_THROWS_AS(cross_entropy_mean(logits, {0, 1}), DataError);
}

}  // TEST_SUITE
