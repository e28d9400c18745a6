#include <doctest.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <set>
#include <vector>

#include "same/common.hpp"
#include "same/metrics.hpp"
#include "same/rng.hpp"

using namespace same;

// ---------------------------------------------------------------------------
// Brute-force oracles. Kept deliberately naive and independent of the
// library's sorted-sweep implementations.
// ---------------------------------------------------------------------------

static double oracle_auroc(const std::vector<double>& pos, const std::vector<double>& neg) {
    double credit = 0.0;
    for (double p : pos) {
        for (double n : neg) {
            if (p > n) {
                credit += 1.0;
            } else if (p == n) {
                credit += 0.5;
            }
        }
    }
    return credit / (static_cast<double>(pos.size()) * static_cast<double>(neg.size()));
}

static double oracle_aupr(const std::vector<double>& pos, const std::vector<double>& neg) {
    std::set<double, std::greater<double>> thresholds(pos.begin(), pos.end());
    thresholds.insert(neg.begin(), neg.end());
    double ap = 0.0;
    double prev_recall = 0.0;
    for (double t : thresholds) {
        long tp = 0, fp = 0;
        for (double p : pos) tp += (p >= t);
        for (double n : neg) fp += (n >= t);
        double recall = static_cast<double>(tp) / static_cast<double>(pos.size());
        double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    return ap;
}

static double oracle_fpr_at_tpr(const std::vector<double>& pos, const std::vector<double>& neg, double target) {
    std::set<double> thresholds(pos.begin(), pos.end());
    thresholds.insert(neg.begin(), neg.end());
    double best = 1.0;
    for (double t : thresholds) {
        long tp = 0, fp = 0;
        for (double p : pos) tp += (p >= t);
        for (double n : neg) fp += (n >= t);
        double tpr = static_cast<double>(tp) / static_cast<double>(pos.size());
        if (tpr >= target) best = std::min(best, static_cast<double>(fp) / static_cast<double>(neg.size()));
    }
    return best;
}

TEST_CASE("auroc hand-checked examples") {
    // 3 winning pairs of 4.
    CHECK(auroc({{0.3, 0.9}, {0.1, 0.4}}) == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(oracle_auroc({0.3, 0.9}, {0.1, 0.4}) == doctest::Approx(0.75).epsilon(1e-12));

    CHECK(auroc({{0.7, 0.8}, {0.1, 0.2}}) == doctest::Approx(1.0));
    CHECK(auroc({{0.5, 0.25}, {0.5, 0.25}}) == doctest::Approx(0.5));
}

TEST_CASE("aupr hand-checked examples") {
    CHECK(aupr({{0.7, 0.8}, {0.1, 0.2}}) == doctest::Approx(1.0));

    // Single positive ranked above nine negatives.
    std::vector<double> neg;
    for (int i = 0; i < 9; ++i) neg.push_back(0.1 + 0.05 * i);
    CHECK(aupr({{0.99}, neg}) == doctest::Approx(1.0));

    // AP = 1 * 1/2 + 2/3 * 1/2 = 5/6.
    CHECK(aupr({{0.9, 0.3}, {0.5}}) == doctest::Approx(5.0 / 6.0).epsilon(1e-12));
    CHECK(oracle_aupr({0.9, 0.3}, {0.5}) == doctest::Approx(5.0 / 6.0).epsilon(1e-12));
}

TEST_CASE("fpr_at_tpr hand-checked examples") {
    CHECK(fpr_at_tpr({{0.7, 0.8}, {0.1, 0.2}}, 0.95) == doctest::Approx(0.0));
    // Threshold must drop to 0.5 to catch both positives, admitting neg 0.6.
    CHECK(fpr_at_tpr({{0.9, 0.5}, {0.4, 0.6}}, 1.0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(oracle_fpr_at_tpr({0.9, 0.5}, {0.4, 0.6}, 1.0) == doctest::Approx(0.5).epsilon(1e-12));
    // Half the positives suffice here.
    CHECK(fpr_at_tpr({{0.9, 0.5}, {0.4, 0.6}}, 0.5) == doctest::Approx(0.0));
}

TEST_CASE("preconditions") {
    CHECK_THROWS_AS(ScoredPopulation({}, {0.1}), ValueError);
    CHECK_THROWS_AS(ScoredPopulation({0.1}, {}), ValueError);
    CHECK_THROWS_AS(ScoredPopulation({std::nan("")}, {0.1}), ValueError);
    ScoredPopulation ok({0.2}, {0.1});
    CHECK_THROWS_AS(fpr_at_tpr(ok, 0.0), ValueError);
    CHECK_THROWS_AS(fpr_at_tpr(ok, 1.5), ValueError);
}

static ScoredPopulation random_population(std::mt19937_64& g) {
    auto draw_scores = [&](std::size_t n) {
        std::vector<double> s(n);
        for (auto& v : s) {
            v = uniform01(g);
            // Inject ties by snapping some scores to a coarse grid.
            if (uniform_below(g, 3) == 0) v = std::round(v * 8.0) / 8.0;
        }
        return s;
    };
    std::size_t np = 1 + uniform_below(g, 32);
    std::size_t nn = 1 + uniform_below(g, 32);
    return ScoredPopulation(draw_scores(np), draw_scores(nn));
}

TEST_CASE("oracle equivalence over 200 random tie-heavy populations") {
    auto start = std::chrono::steady_clock::now();
    auto g = RngHandle(2024, "metrics-oracle").engine();
    for (int trial = 0; trial < 200; ++trial) {
        ScoredPopulation p = random_population(g);
        CHECK(auroc(p) == doctest::Approx(oracle_auroc(p.positives, p.negatives)).epsilon(1e-9));
        CHECK(aupr(p) == doctest::Approx(oracle_aupr(p.positives, p.negatives)).epsilon(1e-9));
        for (double target : {0.5, 0.9, 0.95, 1.0}) {
            CHECK(fpr_at_tpr(p, target) ==
                  doctest::Approx(oracle_fpr_at_tpr(p.positives, p.negatives, target)).epsilon(1e-9));
        }
    }
    auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    CHECK(elapsed < 10.0);
}

TEST_CASE("monotone transform invariance") {
    auto g = RngHandle(9, "metrics-monotone").engine();
    for (int trial = 0; trial < 20; ++trial) {
        ScoredPopulation p = random_population(g);
        auto transform = [](const std::vector<double>& v) {
            std::vector<double> out(v.size());
            for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::exp(3.0 * v[i]) + v[i];
            return out;
        };
        ScoredPopulation q(transform(p.positives), transform(p.negatives));
        CHECK(auroc(q) == doctest::Approx(auroc(p)).epsilon(1e-12));
        CHECK(aupr(q) == doctest::Approx(aupr(p)).epsilon(1e-12));
        CHECK(fpr_at_tpr(q, 0.95) == doctest::Approx(fpr_at_tpr(p, 0.95)).epsilon(1e-12));
    }
}

TEST_CASE("class-swap identity for auroc") {
    auto g = RngHandle(10, "metrics-swap").engine();
    for (int trial = 0; trial < 20; ++trial) {
        ScoredPopulation p = random_population(g);
        auto negate = [](const std::vector<double>& v) {
            std::vector<double> out(v.size());
            for (std::size_t i = 0; i < v.size(); ++i) out[i] = -v[i];
            return out;
        };
        ScoredPopulation swapped(negate(p.negatives), negate(p.positives));
        CHECK(auroc(swapped) == doctest::Approx(auroc(p)).epsilon(1e-12));
    }
}
