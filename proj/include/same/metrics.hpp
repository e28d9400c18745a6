#pragma once

#include <vector>

namespace same {

// Scores for a labeled population: positives are the malicious (anomalous)
// class. Higher score = more anomalous. Both lists must be non-empty and
// finite; checked at construction.
struct ScoredPopulation {
    std::vector<double> positives;
    std::vector<double> negatives;

    ScoredPopulation(std::vector<double> pos, std::vector<double> neg);
};

// P(random positive > random negative) + 0.5 * P(tie), computed exactly.
double auroc(const ScoredPopulation& p);

// Average precision with equal scores treated as a single threshold:
// sum over descending unique thresholds of precision * recall increment.
double aupr(const ScoredPopulation& p);

// Minimal false-positive rate over thresholds (drawn from the observed
// scores) whose true-positive rate reaches tpr_target. Classification rule
// is score >= threshold.
double fpr_at_tpr(const ScoredPopulation& p, double tpr_target);

}  // namespace same
