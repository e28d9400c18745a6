#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "same/auxiliary.hpp"
#include "same/classifier.hpp"
#include "same/mae.hpp"

namespace same {

enum class Verdict { benign, malicious };

struct DetectorConfig {
    double alpha = 0.5;                 // weight of the reconstruction term
    double target_fpr = 0.05;           // calibration target
    double threshold = 0.0;             // tau, set by calibration
    bool calibrated = false;
    double c_rec = 1.0, c_dev = 1.0;    // per-term normalizers (clean medians)
    double score_mask_ratio = 0.75;
};

struct AnomalyRecord {
    double recon_error = 0.0;
    double deviation_error = 0.0;
    double score = 0.0;
    Verdict verdict = Verdict::benign;
    std::int64_t unix_millis = 0;       // stamped by the serving layer
    std::uint64_t query_fingerprint = 0;
};

// tau = nearest-rank (1 - target_fpr) quantile of the clean scores.
double calibrate_threshold(std::vector<double> clean_scores, double target_fpr);

// Medians of the clean per-term errors, floored at 1e-12.
std::pair<double, double> fit_normalizers(const std::vector<double>& clean_recon,
                                          const std::vector<double>& clean_dev);

// Malicious iff score strictly exceeds tau; ties stay benign.
Verdict classify_query(const AnomalyRecord& record, double tau);

// alpha * recon/c_rec + (1 - alpha) * deviation/c_dev.
double combine_score(double recon_error, double deviation_error, const DetectorConfig& cfg);

struct CalibrationSummary {
    double c_rec = 0.0, c_dev = 0.0, threshold = 0.0;
    double empirical_fpr = 0.0;
    std::string calibration_fingerprint;
};

// Assembled detection triple. Construction verifies that the auxiliary
// model was trained against exactly this victim and autoencoder. Frozen
// after calibration; scoring is safe from concurrent callers.
class Detector {
public:
    Detector(Classifier victim, MaeModel mae, AuxiliaryModel aux, DetectorConfig cfg);

    // Score combination: alpha * recon/c_rec + (1-alpha) * deviation/c_dev.
    // Pure function of (models, query bytes, config).
    AnomalyRecord score(const ImageTensor& x) const;

    // Scores the clean set, fits normalizers, then sets tau at the target
    // false-positive rate.
    CalibrationSummary calibrate(const LabeledDataset& clean, double target_fpr);

    const Classifier& victim() const { return victim_; }
    const MaeModel& mae() const { return mae_; }
    const AuxiliaryModel& auxiliary() const { return aux_; }
    const DetectorConfig& config() const { return cfg_; }
    DetectorConfig& config() { return cfg_; }

    void save_bundle(const std::string& path) const;
    // Bundle carries config + hashes; model checkpoints are loaded from
    // the recorded sibling paths and re-verified against the hashes.
    static Detector load_bundle(const std::string& path);
    void set_checkpoint_paths(const std::string& victim_base, const std::string& mae_base,
                              const std::string& aux_base);

private:
    Classifier victim_;
    MaeModel mae_;
    AuxiliaryModel aux_;
    DetectorConfig cfg_;
    std::string victim_path_, mae_path_, aux_path_;
    std::string calibration_fingerprint_;
};

}  // namespace same
