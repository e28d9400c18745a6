#include "same/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "same/common.hpp"

namespace same {

ScoredPopulation::ScoredPopulation(std::vector<double> pos, std::vector<double> neg)
    : positives(std::move(pos)), negatives(std::move(neg)) {
    if (positives.empty() || negatives.empty()) {
        throw ValueError("ScoredPopulation: both classes must be non-empty");
    }
    for (double s : positives) {
        if (!std::isfinite(s)) throw ValueError("ScoredPopulation: non-finite positive score");
    }
    for (double s : negatives) {
        if (!std::isfinite(s)) throw ValueError("ScoredPopulation: non-finite negative score");
    }
}

double auroc(const ScoredPopulation& p) {
    std::vector<double> neg = p.negatives;
    std::sort(neg.begin(), neg.end());
    // For each positive: #negatives strictly below gets full credit,
    // ties get half. Counts are exact in double well past any feasible n.
    double credit = 0.0;
    for (double s : p.positives) {
        auto lo = std::lower_bound(neg.begin(), neg.end(), s);
        auto hi = std::upper_bound(neg.begin(), neg.end(), s);
        credit += static_cast<double>(lo - neg.begin());
        credit += 0.5 * static_cast<double>(hi - lo);
    }
    return credit / (static_cast<double>(p.positives.size()) * static_cast<double>(p.negatives.size()));
}

namespace {

struct SweepPoint {
    double threshold;
    long tp;
    long fp;
};

// Cumulative (tp, fp) after each descending unique threshold, with equal
// scores grouped into one step.
std::vector<SweepPoint> threshold_sweep(const ScoredPopulation& p) {
    std::vector<std::pair<double, bool>> scored;  // (score, is_positive)
    scored.reserve(p.positives.size() + p.negatives.size());
    for (double s : p.positives) scored.emplace_back(s, true);
    for (double s : p.negatives) scored.emplace_back(s, false);
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) { return a.first > b.first; });

    std::vector<SweepPoint> out;
    long tp = 0, fp = 0;
    std::size_t i = 0;
    while (i < scored.size()) {
        double t = scored[i].first;
        while (i < scored.size() && scored[i].first == t) {
            if (scored[i].second) {
                ++tp;
            } else {
                ++fp;
            }
            ++i;
        }
        out.push_back({t, tp, fp});
    }
    return out;
}

}  // namespace

double aupr(const ScoredPopulation& p) {
    const double total_pos = static_cast<double>(p.positives.size());
    double ap = 0.0;
    double prev_recall = 0.0;
    for (const SweepPoint& pt : threshold_sweep(p)) {
        double recall = static_cast<double>(pt.tp) / total_pos;
        double precision = static_cast<double>(pt.tp) / static_cast<double>(pt.tp + pt.fp);
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    return ap;
}

double fpr_at_tpr(const ScoredPopulation& p, double tpr_target) {
    if (!(tpr_target > 0.0 && tpr_target <= 1.0)) {
        throw ValueError("fpr_at_tpr: target must be in (0, 1]");
    }
    const double total_pos = static_cast<double>(p.positives.size());
    const double total_neg = static_cast<double>(p.negatives.size());
    double best = 1.0;  // threshold below all scores classifies everything positive
    for (const SweepPoint& pt : threshold_sweep(p)) {
        double tpr = static_cast<double>(pt.tp) / total_pos;
        if (tpr >= tpr_target) {
            best = std::min(best, static_cast<double>(pt.fp) / total_neg);
        }
    }
    return best;
}

}  // namespace same
