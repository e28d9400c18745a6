#include "same/auxiliary.hpp"

#include <fstream>

#include <json.hpp>

#include "same/common.hpp"

namespace same {

using nlohmann::json;

LabeledDataset build_reconstructed_dataset(const MaeModel& mae, const LabeledDataset& data,
                                           const RngHandle& rng) {
    if (data.empty()) throw ValueError("build_reconstructed_dataset: empty dataset");
    LabeledDataset out;
    out.name = data.name + "/reconstructed";
    out.num_classes = data.num_classes;
    out.labels = data.labels;
    out.samples.reserve(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        auto mask = sample_mask(mae.num_patches(), mae.default_mask_ratio(),
                                rng.derive(std::to_string(i)));
        out.samples.push_back(mae.reconstruct(data.samples[i], mask));
    }
    return out;
}

AuxiliaryModel train_auxiliary(const Classifier& victim, const MaeModel& mae,
                               const LabeledDataset& originals, const LabeledDataset& recon_data,
                               const TrainConfig& cfg) {
    if (originals.size() != recon_data.size()) {
        throw ConsistencyError("train_auxiliary: originals/reconstructions count mismatch");
    }
    if (originals.empty()) throw ValueError("train_auxiliary: empty dataset");
    if (originals.num_classes != victim.num_classes()) {
        throw ConsistencyError("train_auxiliary: num_classes mismatch with victim");
    }

    const std::string victim_hash_before = victim.weight_hash();

    // Targets: the frozen victim's soft predictions on the originals.
    nn::Mat<float> targets(static_cast<int>(originals.size()), victim.num_classes());
    const std::size_t chunk = 512;
    for (std::size_t start = 0; start < originals.size(); start += chunk) {
        std::size_t end = std::min(originals.size(), start + chunk);
        std::vector<ImageTensor> xs(originals.samples.begin() + start, originals.samples.begin() + end);
        auto probs = victim.predict_batch(xs);
        for (std::size_t i = start; i < end; ++i) {
            std::memcpy(targets.row(static_cast<int>(i)), probs.row(static_cast<int>(i - start)),
                        sizeof(float) * victim.num_classes());
        }
    }

    AuxiliaryModel aux;
    aux.model = train_on_soft_targets(victim.arch(), victim.input_shape(), recon_data.samples, targets, cfg,
                                      recon_data.fingerprint());
    aux.mae_hash = mae.weight_hash();
    aux.victim_hash = victim_hash_before;
    aux.seed = cfg.seed;

    if (victim.weight_hash() != victim_hash_before) {
        throw ConsistencyError("train_auxiliary: victim weights changed during auxiliary training");
    }
    return aux;
}

double deviation_error(const std::vector<float>& p_victim, const std::vector<float>& p_aux) {
    if (p_victim.size() != p_aux.size()) throw ShapeError("deviation_error: length mismatch");
    if (p_victim.empty()) throw ValueError("deviation_error: empty vectors");
    double sum = 0.0;
    for (std::size_t i = 0; i < p_victim.size(); ++i) {
        double d = static_cast<double>(p_victim[i]) - static_cast<double>(p_aux[i]);
        sum += d * d;
    }
    return sum / static_cast<double>(p_victim.size());
}

double auxiliary_loss(const Classifier& victim, const Classifier& aux, const LabeledDataset& originals,
                      const LabeledDataset& recon_data) {
    if (originals.size() != recon_data.size()) {
        throw ConsistencyError("auxiliary_loss: dataset size mismatch");
    }
    if (originals.empty()) throw ValueError("auxiliary_loss: empty datasets");
    double sum = 0.0;
    for (std::size_t i = 0; i < originals.size(); ++i) {
        sum += deviation_error(victim.predict(originals.samples[i]), aux.predict(recon_data.samples[i]));
    }
    return sum / static_cast<double>(originals.size());
}

void AuxiliaryModel::save(const std::string& base_path) const {
    model.save(base_path);
    // Extend the classifier manifest with provenance links.
    std::ifstream in(base_path + ".json");
    json manifest;
    in >> manifest;
    in.close();
    manifest["format"] = "same-auxiliary-checkpoint";
    manifest["mae_hash"] = mae_hash;
    manifest["victim_hash"] = victim_hash;
    manifest["aux_seed"] = seed;
    std::ofstream out(base_path + ".json");
    if (!out) throw IoError("auxiliary checkpoint: cannot write " + base_path + ".json");
    out << manifest.dump(2) << "\n";
}

AuxiliaryModel AuxiliaryModel::load(const std::string& base_path) {
    std::ifstream in(base_path + ".json");
    if (!in) throw IoError("auxiliary checkpoint: cannot open " + base_path + ".json");
    json manifest;
    try {
        in >> manifest;
    } catch (const json::exception& e) {
        throw FormatError("auxiliary checkpoint: bad manifest: " + std::string(e.what()));
    }
    in.close();
    if (manifest.value("format", "") != "same-auxiliary-checkpoint") {
        throw FormatError("auxiliary checkpoint: " + base_path + " is not an auxiliary checkpoint");
    }
    AuxiliaryModel aux;
    aux.model = Classifier::load(base_path, "same-auxiliary-checkpoint");
    aux.mae_hash = manifest.value("mae_hash", "");
    aux.victim_hash = manifest.value("victim_hash", "");
    aux.seed = manifest.value("aux_seed", std::uint64_t{0});
    return aux;
}

}  // namespace same
