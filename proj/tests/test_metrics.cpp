#include <doctest.h>

#include <cmath>

#include "metric_oracles.hpp"
#include "phaseseg/errors.hpp"
#include "phaseseg/metrics.hpp"
#include "phaseseg/rng.hpp"

using namespace phaseseg;

namespace {

std::vector<int> random_labels(int t, int c, Rng& rng) {
    std::vector<int> out(static_cast<std::size_t>(t));
    for (auto& v : out) v = static_cast<int>(rng.uniform_int(c));
    return out;
}

// enumerate the i-th of C^T label sequences
std::vector<int> nth_sequence(long long n, int t, int c) {
    std::vector<int> out(static_cast<std::size_t>(t));
    for (int i = 0; i < t; ++i) {
        out[static_cast<std::size_t>(i)] = static_cast<int>(n % c);
        n /= c;
    }
    return out;
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("rle of a constant sequence is one segment") {
    auto segs = segments_from_frames({0, 0, 0});
    REQUIRE(segs.size() == 1);
    CHECK(segs[0] == Segment{0, 0, 3});
}

TEST_CASE("rle splits maximal runs") {
    auto segs = segments_from_frames({0, 1, 1, 0});
    REQUIRE(segs.size() == 3);
    CHECK(segs[0] == Segment{0, 0, 1});
    CHECK(segs[1] == Segment{1, 1, 3});
    CHECK(segs[2] == Segment{0, 3, 4});
}

TEST_CASE("rle round-trips random sequences") {
    Rng rng(202);
    for (int trial = 0; trial < 50; ++trial) {
        auto labels = random_labels(20, 4, rng);
        auto segs = segments_from_frames(labels);
        CHECK(frames_from_segments(segs) == labels);
        for (std::size_t i = 1; i < segs.size(); ++i) {
            CHECK(segs[i].start == segs[i - 1].end);
            CHECK(segs[i].label != segs[i - 1].label);
        }
        CHECK(segs.front().start == 0);
        CHECK(segs.back().end == 20);
    }
    CHECK_THROWS_AS(segments_from_frames({}), DataError);
}

TEST_CASE("accuracy basics") {
    CHECK(accuracy({0, 1, 2}, {0, 1, 2}) == 100.0);
    CHECK(accuracy({1, 2, 0}, {0, 1, 2}) == 0.0);
    CHECK(accuracy({0, 1, 1, 2}, {0, 1, 2, 2}) == 75.0);
    CHECK_THROWS_AS(accuracy({0, 1}, {0}), DataError);
}

TEST_CASE("macro scores on hand cases") {
    auto perfect = macro_prf_jaccard({0, 1, 2}, {0, 1, 2}, 3);
    CHECK(perfect.precision == 100.0);
    CHECK(perfect.recall == 100.0);
    CHECK(perfect.jaccard == 100.0);

    // pred all class 0, gt half class 0 half class 1:
    // class 0: tp=2 fp=2 fn=0 -> recall 100; class 1: tp=0 fn=2 -> recall 0
    auto half = macro_prf_jaccard({0, 0, 0, 0}, {0, 0, 1, 1}, 2);
    CHECK(half.recall == 50.0);

    // class absent from both pred and gt is excluded from the average
    auto excl = macro_prf_jaccard({0, 0}, {0, 0}, 5);
    CHECK(excl.precision == 100.0);
    CHECK(excl.jaccard == 100.0);
}

TEST_CASE("macro scores match the confusion-matrix oracle") {
    Rng rng(203);
    for (int trial = 0; trial < 200; ++trial) {
        auto pred = random_labels(12, 3, rng);
        auto gt = random_labels(12, 3, rng);
        auto got = macro_prf_jaccard(pred, gt, 3);
        auto want = oracle::macro_scores(pred, gt, 3);
        CHECK(std::fabs(got.precision - want.precision) < 1e-9);
        CHECK(std::fabs(got.recall - want.recall) < 1e-9);
        CHECK(std::fabs(got.jaccard - want.jaccard) < 1e-9);
    }
}

TEST_CASE("edit score basics") {
    auto a = segments_from_frames({1, 1, 2, 3, 3});
    CHECK(edit_score(a, a) == 100.0);
    // labels [1,2,3] vs [1,3]: one deletion, normalized by 3
    auto gt = segments_from_frames({1, 2, 3});
    auto pred = segments_from_frames({1, 3});
    CHECK(edit_score(pred, gt) == doctest::Approx(100.0 * (1.0 - 1.0 / 3.0)).epsilon(1e-12));
}

TEST_CASE("levenshtein dp equals exhaustive search on tiny label strings") {
    Rng rng(204);
    for (int trial = 0; trial < 100; ++trial) {
        const int na = static_cast<int>(rng.uniform_int(6));
        const int nb = static_cast<int>(rng.uniform_int(6));
        std::vector<int> a(static_cast<std::size_t>(na)), b(static_cast<std::size_t>(nb));
        for (auto& v : a) v = static_cast<int>(rng.uniform_int(3));
        for (auto& v : b) v = static_cast<int>(rng.uniform_int(3));
        CHECK(levenshtein(a, b) == oracle::levenshtein_exhaustive(a, b));
    }
}

TEST_CASE("levenshtein satisfies the triangle inequality") {
    Rng rng(205);
    for (int trial = 0; trial < 200; ++trial) {
        auto a = random_labels(1 + static_cast<int>(rng.uniform_int(7)), 3, rng);
        auto b = random_labels(1 + static_cast<int>(rng.uniform_int(7)), 3, rng);
        auto c = random_labels(1 + static_cast<int>(rng.uniform_int(7)), 3, rng);
        CHECK(levenshtein(a, c) <= levenshtein(a, b) + levenshtein(b, c));
    }
}

TEST_CASE("f1 basics") {
    auto gt = segments_from_frames({0, 0, 1, 1, 1, 2});
    CHECK(f1_at_tau(gt, gt, 25.0) == 100.0);
    CHECK(f1_at_tau(gt, gt, 50.0) == 100.0);
    CHECK(f1_at_tau(gt, gt, 75.0) == 100.0);

    // gt one 100-frame segment, pred covers the first 60 frames with the same
    // label and the rest with another: IoU of the matching pair is 0.6
    std::vector<int> gt_labels(100, 0);
    std::vector<int> pred_labels(100, 1);
    std::fill(pred_labels.begin(), pred_labels.begin() + 60, 0);
    auto gs = segments_from_frames(gt_labels);
    auto ps = segments_from_frames(pred_labels);
    // pred has a spurious second segment: tp=1, fp=1, fn=0 at tau=50
    CHECK(f1_at_tau(ps, gs, 50.0) == doctest::Approx(100.0 * 2.0 * 0.5 * 1.0 / 1.5).epsilon(1e-12));
    CHECK(f1_at_tau(ps, gs, 75.0) == 0.0);
}

TEST_CASE("f1 is non-increasing in tau") {
    Rng rng(206);
    for (int trial = 0; trial < 100; ++trial) {
        auto ps = segments_from_frames(random_labels(24, 4, rng));
        auto gs = segments_from_frames(random_labels(24, 4, rng));
        const double f25 = f1_at_tau(ps, gs, 25.0);
        const double f50 = f1_at_tau(ps, gs, 50.0);
        const double f75 = f1_at_tau(ps, gs, 75.0);
        CHECK(f25 >= f50);
        CHECK(f50 >= f75);
    }
}

TEST_CASE("all metrics equal their oracles on exhaustive tiny instances") {
    // full cross product of label sequences for T <= 5, C = 3
    for (int t = 1; t <= 5; ++t) {
        long long count = 1;
        for (int i = 0; i < t; ++i) count *= 3;
        for (long long i = 0; i < count; ++i) {
            const auto gt = nth_sequence(i, t, 3);
            const auto gs = segments_from_frames(gt);
            for (long long j = 0; j < count; ++j) {
                const auto pred = nth_sequence(j, t, 3);
                const auto ps = segments_from_frames(pred);
                REQUIRE(std::fabs(accuracy(pred, gt) - oracle::accuracy(pred, gt)) < 1e-9);
                const auto got = macro_prf_jaccard(pred, gt, 3);
                const auto want = oracle::macro_scores(pred, gt, 3);
                REQUIRE(std::fabs(got.precision - want.precision) < 1e-9);
                REQUIRE(std::fabs(got.recall - want.recall) < 1e-9);
                REQUIRE(std::fabs(got.jaccard - want.jaccard) < 1e-9);
                REQUIRE(std::fabs(edit_score(ps, gs) - oracle::edit_score(ps, gs)) < 1e-9);
                for (double tau : {25.0, 50.0, 75.0})
                    REQUIRE(std::fabs(f1_at_tau(ps, gs, tau) - oracle::f1_at_tau(ps, gs, tau)) < 1e-9);
            }
        }
    }
}

TEST_CASE("all metrics equal their oracles on random instances") {
    Rng rng(207);
    for (int trial = 0; trial < 500; ++trial) {
        const int t = 1 + static_cast<int>(rng.uniform_int(64));
        const int c = 2 + static_cast<int>(rng.uniform_int(12));
        auto pred = random_labels(t, c, rng);
        auto gt = random_labels(t, c, rng);
        auto ps = segments_from_frames(pred);
        auto gs = segments_from_frames(gt);
        CHECK(std::fabs(accuracy(pred, gt) - oracle::accuracy(pred, gt)) < 1e-9);
        const auto got = macro_prf_jaccard(pred, gt, c);
        const auto want = oracle::macro_scores(pred, gt, c);
        CHECK(std::fabs(got.precision - want.precision) < 1e-9);
        CHECK(std::fabs(got.recall - want.recall) < 1e-9);
        CHECK(std::fabs(got.jaccard - want.jaccard) < 1e-9);
        CHECK(std::fabs(edit_score(ps, gs) - oracle::edit_score(ps, gs)) < 1e-9);
        for (double tau : {25.0, 50.0, 75.0})
            CHECK(std::fabs(f1_at_tau(ps, gs, tau) - oracle::f1_at_tau(ps, gs, tau)) < 1e-9);
    }
}

TEST_CASE("greedy f1 matching versus optimal matching on small instances") {
    // The stated rule matches each prediction greedily in order. On small
    // instances it should rarely lose to the optimal one-to-one matching;
    // where it does, greedy must only ever find fewer true positives.
    Rng rng(208);
    int deviations = 0;
    for (int trial = 0; trial < 5000; ++trial) {
        const int t = 2 + static_cast<int>(rng.uniform_int(7));
        auto ps = segments_from_frames(random_labels(t, 3, rng));
        auto gs = segments_from_frames(random_labels(t, 3, rng));
        for (double tau : {25.0, 50.0, 75.0}) {
            // recover greedy tp from the score: tp/(tp+fp) and tp/(tp+fn)
            const double f1 = f1_at_tau(ps, gs, tau);
            const int opt = oracle::optimal_tp(ps, gs, tau);
            const double opt_f1 = opt == 0
                ? (ps.empty() && gs.empty() ? 100.0 : 0.0)
                : 200.0 * opt / static_cast<double>(ps.size() + gs.size());
            CHECK(f1 <= opt_f1 + 1e-9);
            if (f1 < opt_f1 - 1e-9) ++deviations;
        }
    }
    // enumerate the deviation count so a behavior change is caught
    CHECK(deviations == 0);
}

TEST_CASE("metrics are invariant under simultaneous relabeling") {
    Rng rng(209);
    const int c = 4;
    std::vector<int> perm = {2, 0, 3, 1};
    for (int trial = 0; trial < 50; ++trial) {
        auto pred = random_labels(30, c, rng);
        auto gt = random_labels(30, c, rng);
        std::vector<int> pred2(pred.size()), gt2(gt.size());
        for (std::size_t i = 0; i < pred.size(); ++i) {
            pred2[i] = perm[static_cast<std::size_t>(pred[i])];
            gt2[i] = perm[static_cast<std::size_t>(gt[i])];
        }
        CHECK(accuracy(pred, gt) == accuracy(pred2, gt2));
        auto a = macro_prf_jaccard(pred, gt, c);
        auto b = macro_prf_jaccard(pred2, gt2, c);
        CHECK(std::fabs(a.precision - b.precision) < 1e-9);
        CHECK(std::fabs(a.recall - b.recall) < 1e-9);
        CHECK(std::fabs(a.jaccard - b.jaccard) < 1e-9);
        CHECK(edit_score(segments_from_frames(pred), segments_from_frames(gt)) ==
              edit_score(segments_from_frames(pred2), segments_from_frames(gt2)));
        for (double tau : {25.0, 50.0, 75.0})
            CHECK(f1_at_tau(segments_from_frames(pred), segments_from_frames(gt), tau) ==
                  f1_at_tau(segments_from_frames(pred2), segments_from_frames(gt2), tau));
    }
}

TEST_CASE("self comparison scores 100 everywhere") {
    Rng rng(210);
    for (int trial = 0; trial < 20; ++trial) {
        auto x = random_labels(40, 5, rng);
        VideoMetrics m = evaluate_video("v", x, x, 5);
        CHECK(m.accuracy == 100.0);
        CHECK(m.precision == 100.0);
        CHECK(m.recall == 100.0);
        CHECK(m.jaccard == 100.0);
        CHECK(m.edit == 100.0);
        CHECK(m.f1_25 == 100.0);
        CHECK(m.f1_50 == 100.0);
        CHECK(m.f1_75 == 100.0);
    }
}

TEST_CASE("aggregate mean and sample std") {
    VideoMetrics a, b, c;
    a.accuracy = 70;
    b.accuracy = 80;
    c.accuracy = 90;
    auto agg = aggregate({a, b, c});
    CHECK(agg.num_videos == 3);
    CHECK(agg.mean.accuracy == doctest::Approx(80.0).epsilon(1e-12));
    CHECK(agg.stddev.accuracy == doctest::Approx(10.0).epsilon(1e-12));

    auto one = aggregate({a});
    CHECK(one.mean.accuracy == 70.0);
    CHECK(one.stddev.accuracy == 0.0);

    auto two = aggregate({VideoMetrics{.video_id = "", .accuracy = 80},
                          VideoMetrics{.video_id = "", .accuracy = 60}});
    CHECK(two.mean.accuracy == doctest::Approx(70.0).epsilon(1e-12));

    CHECK_THROWS_AS(aggregate({}), DataError);
}

}  // TEST_SUITE
