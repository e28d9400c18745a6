#pragma once

#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "same/attacks.hpp"
#include "same/baselines.hpp"
#include "same/detector.hpp"

namespace same {

// End-to-end experiment: train -> attack -> detect -> report. A config
// plus seeds fully determines the run; artifacts are cached under the
// output directory so interrupted runs resume without changing results.

struct ExperimentConfig {
    int version = 1;
    std::uint64_t seed = 1;
    std::string output_dir = "runs/exp";

    // data (self-contained glyph corpora)
    int train_size = 10000;
    int test_size = 1500;
    int calib_size = 1000;
    Shape shape{1, 28, 28};

    // victim
    Arch victim_arch = Arch::conv3;
    TrainConfig victim_train{.epochs = 5, .batch_size = 64, .learning_rate = 0.05, .seed = 0,
                             .loss = LossKind::cross_entropy};

    // autoencoder
    MaeArchConfig mae_arch;
    MaeTrainConfig mae_train;

    // auxiliary
    TrainConfig aux_train{.epochs = 10, .batch_size = 64, .learning_rate = 0.3, .seed = 0,
                          .loss = LossKind::mse_soft_targets};

    // detector
    double alpha = 0.5;
    double target_fpr = 0.05;
    // Mask ratio used when reconstructing queries (and when building the
    // auxiliary's training set); negative means "use the training ratio".
    double score_mask_ratio = -1.0;

    // defenses to evaluate: same, same-x, same-y, oe, edm
    std::vector<std::string> defenses{"same"};
    double oe_gamma = 0.5;
    double edm_gamma = 1.0;
    int edm_models = 2;
    TrainConfig baseline_train{.epochs = 5, .batch_size = 64, .learning_rate = 0.05, .seed = 0,
                               .loss = LossKind::cross_entropy};
    std::string outlier_corpus = "glyph-letters";  // for oe/edm

    std::vector<AttackConfig> attacks;
    std::vector<double> ratios{0.5};

    nlohmann::json to_json() const;
    static ExperimentConfig from_json(const nlohmann::json& j);
    static ExperimentConfig load_file(const std::string& path);
    void save_file(const std::string& path) const;
    std::string fingerprint() const;
};

struct ReportRow {
    std::string defense;
    std::string attack;
    int budget = 0;
    double ratio = 0.0;
    // percentages, rounded to 2 decimals
    double auroc = 0.0;
    double aupr = 0.0;
    double fpr95 = 0.0;
    double fpr90 = 0.0;
    int negatives = 0;
    int positives = 0;
};

struct ExperimentReport {
    int version = 1;
    std::uint64_t seed = 0;
    nlohmann::json config_echo;
    double victim_accuracy_percent = 0.0;
    std::vector<ReportRow> rows;
    double runtime_seconds = 0.0;  // volatile; excluded from canonical form

    // Sorted keys, percent values at 2 decimals, no timing fields: two runs
    // with the same config and seeds serialize byte-identically.
    nlohmann::json canonical_json() const;
};

enum class ReportFormat { json, csv, markdown };

std::set<ReportFormat> parse_report_formats(const std::string& csv_list);

// Writes report.json (canonical), report.csv, report.md as requested plus
// a timings.json sidecar; returns the file paths written.
std::vector<std::string> emit_report(const ExperimentReport& report, const std::string& dir,
                                     const std::set<ReportFormat>& formats);

ExperimentReport run_experiment(const ExperimentConfig& cfg);

ExperimentReport load_report(const std::string& json_path);

}  // namespace same
