#include <doctest.h>

#include <cmath>

#include "phaseseg/kernels.hpp"
#include "phaseseg/loss.hpp"
#include "phaseseg/rng.hpp"

using namespace phaseseg;

namespace {

// Straightforward scalar re-implementations used as oracles.
double ce_oracle(const std::vector<double>& logits, int t_count, int c_count,
                 const std::vector<int>& labels) {
    double total = 0.0;
    std::vector<double> ls(static_cast<std::size_t>(c_count));
    for (int t = 0; t < t_count; ++t) {
        kernels::log_softmax_row(logits.data() + static_cast<std::size_t>(t) * c_count, c_count, ls.data());
        total -= ls[static_cast<std::size_t>(labels[static_cast<std::size_t>(t)])];
    }
    return total / t_count;
}

double smooth_oracle(const std::vector<double>& logits, int t_count, int c_count, double clamp_hi) {
    if (t_count < 2) return 0.0;
    std::vector<double> prev(static_cast<std::size_t>(c_count)), cur(static_cast<std::size_t>(c_count));
    kernels::log_softmax_row(logits.data(), c_count, prev.data());
    double total = 0.0;
    for (int t = 1; t < t_count; ++t) {
        kernels::log_softmax_row(logits.data() + static_cast<std::size_t>(t) * c_count, c_count, cur.data());
        for (int c = 0; c < c_count; ++c) {
            const double d = cur[static_cast<std::size_t>(c)] - prev[static_cast<std::size_t>(c)];
            total += std::min(d * d, clamp_hi);
        }
        prev = cur;
    }
    return total / (static_cast<double>(t_count) * c_count);
}

TensorPtr random_logits(int t, int c, Rng& rng, double scale = 1.0) {
    auto x = Tensor::create({t, c}, false);
    for (auto& v : x->data) v = rng.normal() * scale;
    return x;
}

}  // namespace

TEST_SUITE("loss") {

TEST_CASE("uniform two-class cross-entropy is ln 2") {
    auto logits = Tensor::from_data({1, 2}, {0.0, 0.0}, false);
    CHECK(cross_entropy(logits, {0})->data[0] == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(cross_entropy(logits, {1})->data[0] == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("strongly peaked logits give near-zero cross-entropy") {
    auto logits = Tensor::from_data({2, 3}, {20.0, 0.0, 0.0, 0.0, 20.0, 0.0}, false);
    CHECK(cross_entropy(logits, {0, 1})->data[0] < 1e-8);
}

TEST_CASE("cross-entropy matches the scalar oracle to 1e-12") {
    Rng rng(101);
    auto logits = random_logits(5, 3, rng, 2.0);
    std::vector<int> labels = {0, 2, 1, 1, 0};
    const double got = cross_entropy(logits, labels)->data[0];
    const double want = ce_oracle(logits->data, 5, 3, labels);
    CHECK(std::fabs(got - want) < 1e-12);
}

TEST_CASE("identical frames give zero smoothing loss") {
    auto logits = Tensor::from_data({3, 2}, {1.0, -1.0, 1.0, -1.0, 1.0, -1.0}, false);
    CHECK(smoothing_loss(logits, LossConfig{})->data[0] == 0.0);
}

TEST_CASE("single frame gives zero smoothing loss") {
    auto logits = Tensor::from_data({1, 4}, {3.0, 1.0, 0.0, -2.0}, false);
    CHECK(smoothing_loss(logits, LossConfig{})->data[0] == 0.0);
}

TEST_CASE("a log-probability jump of 5 is clamped to 16") {
    // Two classes far apart, swapped between frames: both per-class deltas
    // have magnitude > 4, so each term saturates at the clamp.
    auto logits = Tensor::from_data({2, 2}, {5.0, 0.0, 0.0, 5.0}, false);
    LossConfig cfg;
    // deltas are exactly -5 and +5; clamp(25) = 16 for both classes
    const double want = (16.0 + 16.0) / (2.0 * 2.0);
    CHECK(smoothing_loss(logits, cfg)->data[0] == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("smoothing loss matches the scalar oracle to 1e-12") {
    Rng rng(55);
    auto logits = random_logits(6, 3, rng, 3.0);
    const double got = smoothing_loss(logits, LossConfig{})->data[0];
    const double want = smooth_oracle(logits->data, 6, 3, 16.0);
    CHECK(std::fabs(got - want) < 1e-12);
}

TEST_CASE("smoothing loss stays within the clamp bounds") {
    Rng rng(66);
    for (int trial = 0; trial < 20; ++trial) {
        auto logits = random_logits(8, 4, rng, 10.0);
        const double v = smoothing_loss(logits, LossConfig{})->data[0];
        CHECK(v >= 0.0);
        CHECK(v <= 16.0);
    }
}

TEST_CASE("smoothing loss is invariant to per-frame logit shifts") {
    Rng rng(77);
    auto logits = random_logits(5, 3, rng, 2.0);
    auto shifted = Tensor::create({5, 3}, false);
    shifted->data = logits->data;
    for (int t = 0; t < 5; ++t) {
        const double shift = rng.uniform(-50.0, 50.0);
        for (int c = 0; c < 3; ++c) shifted->at(t, c) += shift;
    }
    const double a = smoothing_loss(logits, LossConfig{})->data[0];
    const double b = smoothing_loss(shifted, LossConfig{})->data[0];
    CHECK(std::fabs(a - b) < 1e-9);
}

TEST_CASE("removing a boundary does not increase the smoothing loss") {
    Rng rng(88);
    // piecewise-constant logits with one boundary at t=3
    auto with_boundary = Tensor::create({6, 3}, false);
    std::vector<double> row_a = {rng.normal(), rng.normal(), rng.normal()};
    std::vector<double> row_b = {rng.normal() + 2.0, rng.normal(), rng.normal()};
    for (int t = 0; t < 6; ++t)
        for (int c = 0; c < 3; ++c)
            with_boundary->at(t, c) = (t < 3 ? row_a : row_b)[static_cast<std::size_t>(c)];
    auto flat = Tensor::create({6, 3}, false);
    for (int t = 0; t < 6; ++t)
        for (int c = 0; c < 3; ++c) flat->at(t, c) = row_a[static_cast<std::size_t>(c)];
    CHECK(smoothing_loss(flat, LossConfig{})->data[0] <=
          smoothing_loss(with_boundary, LossConfig{})->data[0]);
    CHECK(smoothing_loss(flat, LossConfig{})->data[0] == 0.0);
}

TEST_CASE("total loss with lambda 0 is the sum of stage cross-entropies") {
    Rng rng(99);
    std::vector<TensorPtr> stages = {random_logits(4, 3, rng), random_logits(4, 3, rng)};
    std::vector<int> labels = {0, 1, 2, 1};
    LossConfig cfg;
    cfg.lambda = 0.0;
    const double got = total_loss(stages, labels, cfg)->data[0];
    const double want = cross_entropy(stages[0], labels)->data[0] +
                        cross_entropy(stages[1], labels)->data[0];
    CHECK(std::fabs(got - want) < 1e-12);
}

TEST_CASE("single stage, single frame reduces to cross-entropy") {
    auto logits = Tensor::from_data({1, 3}, {1.0, 2.0, 0.5}, false);
    std::vector<int> labels = {1};
    const double got = total_loss({logits}, labels, LossConfig{})->data[0];
    const double want = cross_entropy(logits, labels)->data[0];
    CHECK(got == want);
}

TEST_CASE("four stages equal the manual four-term sum") {
    Rng rng(111);
    std::vector<TensorPtr> stages;
    for (int s = 0; s < 4; ++s) stages.push_back(random_logits(7, 5, rng, 2.0));
    std::vector<int> labels = {0, 1, 2, 3, 4, 0, 1};
    LossConfig cfg;
    const double got = total_loss(stages, labels, cfg)->data[0];
    double want = 0.0;
    for (const auto& s : stages)
        want += ce_oracle(s->data, 7, 5, labels) + cfg.lambda * smooth_oracle(s->data, 7, 5, cfg.clamp_hi);
    CHECK(std::fabs(got - want) < 1e-12);
}

TEST_CASE("config validation") {
    LossConfig cfg;
    cfg.lambda = -0.1;
    CHECK_THROWS_AS(cfg.validate(), ParameterError);
    cfg = LossConfig{};
    cfg.clamp_hi = -1.0;
    CHECK_THROWS_AS(cfg.validate(), ParameterError);
}

}  // TEST_SUITE
