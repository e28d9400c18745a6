#include "same/detector.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "same/common.hpp"

namespace same {

using nlohmann::json;

double calibrate_threshold(std::vector<double> clean_scores, double target_fpr) {
    if (clean_scores.empty()) throw ValueError("calibrate_threshold: no clean scores");
    if (!(target_fpr > 0.0 && target_fpr < 1.0)) {
        throw ValueError("calibrate_threshold: target fpr must be in (0,1)");
    }
    std::sort(clean_scores.begin(), clean_scores.end());
    const std::size_t n = clean_scores.size();
    std::size_t rank = static_cast<std::size_t>(std::ceil((1.0 - target_fpr) * static_cast<double>(n)));
    rank = std::clamp<std::size_t>(rank, 1, n);
    return clean_scores[rank - 1];
}

static double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::pair<double, double> fit_normalizers(const std::vector<double>& clean_recon,
                                          const std::vector<double>& clean_dev) {
    if (clean_recon.empty() || clean_dev.empty()) throw ValueError("fit_normalizers: empty inputs");
    constexpr double kFloor = 1e-12;
    return {std::max(median(clean_recon), kFloor), std::max(median(clean_dev), kFloor)};
}

Verdict classify_query(const AnomalyRecord& record, double tau) {
    return record.score > tau ? Verdict::malicious : Verdict::benign;
}

double combine_score(double recon_error, double deviation_error, const DetectorConfig& cfg) {
    return cfg.alpha * (recon_error / cfg.c_rec) + (1.0 - cfg.alpha) * (deviation_error / cfg.c_dev);
}

Detector::Detector(Classifier victim, MaeModel mae, AuxiliaryModel aux, DetectorConfig cfg)
    : victim_(std::move(victim)), mae_(std::move(mae)), aux_(std::move(aux)), cfg_(cfg) {
    if (!(cfg_.alpha >= 0.0 && cfg_.alpha <= 1.0)) throw ValueError("Detector: alpha must be in [0,1]");
    if (aux_.victim_hash != victim_.weight_hash()) {
        throw ProvenanceError("Detector: auxiliary was trained against a different victim");
    }
    if (aux_.mae_hash != mae_.weight_hash()) {
        throw ProvenanceError("Detector: auxiliary was trained against a different autoencoder");
    }
    if (aux_.model.num_classes() != victim_.num_classes()) {
        throw ProvenanceError("Detector: auxiliary/victim class count mismatch");
    }
}

AnomalyRecord Detector::score(const ImageTensor& x) const {
    AnomalyRecord r;
    r.query_fingerprint = x.content_key();

    auto mask = query_mask(x, mae_.num_patches(), cfg_.score_mask_ratio);
    ImageTensor xhat = mae_.reconstruct(x, mask);
    r.recon_error = reconstruction_error(x, xhat);
    r.deviation_error = deviation_error(victim_.predict(x), aux_.model.predict(xhat));
    r.score = combine_score(r.recon_error, r.deviation_error, cfg_);
    r.verdict = cfg_.calibrated ? classify_query(r, cfg_.threshold) : Verdict::benign;
    return r;
}

CalibrationSummary Detector::calibrate(const LabeledDataset& clean, double target_fpr) {
    if (clean.empty()) throw ValueError("Detector::calibrate: empty calibration set");
    std::vector<double> rec, dev;
    rec.reserve(clean.size());
    dev.reserve(clean.size());
    for (const auto& x : clean.samples) {
        auto mask = query_mask(x, mae_.num_patches(), cfg_.score_mask_ratio);
        ImageTensor xhat = mae_.reconstruct(x, mask);
        rec.push_back(reconstruction_error(x, xhat));
        dev.push_back(deviation_error(victim_.predict(x), aux_.model.predict(xhat)));
    }
    auto [c_rec, c_dev] = fit_normalizers(rec, dev);
    cfg_.c_rec = c_rec;
    cfg_.c_dev = c_dev;

    std::vector<double> scores(clean.size());
    for (std::size_t i = 0; i < clean.size(); ++i) scores[i] = combine_score(rec[i], dev[i], cfg_);
    cfg_.threshold = calibrate_threshold(scores, target_fpr);
    cfg_.target_fpr = target_fpr;
    cfg_.calibrated = true;

    CalibrationSummary s;
    s.c_rec = c_rec;
    s.c_dev = c_dev;
    s.threshold = cfg_.threshold;
    long over = 0;
    for (double v : scores) over += (v > cfg_.threshold);
    s.empirical_fpr = static_cast<double>(over) / static_cast<double>(scores.size());
    s.calibration_fingerprint = clean.fingerprint();
    calibration_fingerprint_ = s.calibration_fingerprint;
    return s;
}

void Detector::set_checkpoint_paths(const std::string& victim_base, const std::string& mae_base,
                                    const std::string& aux_base) {
    victim_path_ = victim_base;
    mae_path_ = mae_base;
    aux_path_ = aux_base;
}

void Detector::save_bundle(const std::string& path) const {
    if (victim_path_.empty() || mae_path_.empty() || aux_path_.empty()) {
        throw ValueError("save_bundle: checkpoint paths not set");
    }
    json bundle = {
        {"format", "same-detector-bundle"},
        {"version", 1},
        {"victim", {{"path", victim_path_}, {"hash", victim_.weight_hash()}}},
        {"mae", {{"path", mae_path_}, {"hash", mae_.weight_hash()}}},
        {"auxiliary", {{"path", aux_path_}, {"hash", aux_.model.weight_hash()}}},
        {"alpha", cfg_.alpha},
        {"threshold", cfg_.threshold},
        {"calibrated", cfg_.calibrated},
        {"target_fpr", cfg_.target_fpr},
        {"c_rec", cfg_.c_rec},
        {"c_dev", cfg_.c_dev},
        {"score_mask_ratio", cfg_.score_mask_ratio},
        {"calibration_fingerprint", calibration_fingerprint_},
    };
    std::ofstream out(path);
    if (!out) throw IoError("save_bundle: cannot write " + path);
    out << bundle.dump(2) << "\n";
}

Detector Detector::load_bundle(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("load_bundle: cannot open " + path);
    json bundle;
    try {
        in >> bundle;
    } catch (const json::exception& e) {
        throw FormatError("load_bundle: bad bundle file: " + std::string(e.what()));
    }
    if (bundle.value("format", "") != "same-detector-bundle") {
        throw FormatError("load_bundle: " + path + " is not a detector bundle");
    }

    Classifier victim = Classifier::load(bundle.at("victim").at("path").get<std::string>());
    MaeModel mae = MaeModel::load(bundle.at("mae").at("path").get<std::string>());
    AuxiliaryModel aux = AuxiliaryModel::load(bundle.at("auxiliary").at("path").get<std::string>());
    if (victim.weight_hash() != bundle.at("victim").at("hash").get<std::string>() ||
        mae.weight_hash() != bundle.at("mae").at("hash").get<std::string>() ||
        aux.model.weight_hash() != bundle.at("auxiliary").at("hash").get<std::string>()) {
        throw ProvenanceError("load_bundle: checkpoint hash mismatch with bundle");
    }

    DetectorConfig cfg;
    cfg.alpha = bundle.value("alpha", 0.5);
    cfg.threshold = bundle.value("threshold", 0.0);
    cfg.calibrated = bundle.value("calibrated", false);
    cfg.target_fpr = bundle.value("target_fpr", 0.05);
    cfg.c_rec = bundle.value("c_rec", 1.0);
    cfg.c_dev = bundle.value("c_dev", 1.0);
    cfg.score_mask_ratio = bundle.value("score_mask_ratio", 0.75);

    Detector d(std::move(victim), std::move(mae), std::move(aux), cfg);
    d.set_checkpoint_paths(bundle.at("victim").at("path").get<std::string>(),
                           bundle.at("mae").at("path").get<std::string>(),
                           bundle.at("auxiliary").at("path").get<std::string>());
    d.calibration_fingerprint_ = bundle.value("calibration_fingerprint", "");
    return d;
}

}  // namespace same
