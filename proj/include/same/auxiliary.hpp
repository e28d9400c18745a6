#pragma once

#include "same/classifier.hpp"
#include "same/mae.hpp"

namespace same {

// Victim-architecture classifier trained so its predictions on
// reconstructed samples mirror the victim's predictions on the originals.
// Carries the hashes of the exact victim and autoencoder it was trained
// against; the detector refuses mismatched triples.
struct AuxiliaryModel {
    Classifier model;
    std::string mae_hash;
    std::string victim_hash;
    std::uint64_t seed = 0;

    void save(const std::string& base_path) const;
    static AuxiliaryModel load(const std::string& base_path);
};

// Per-sample single-pass reconstruction with fresh masks drawn from rng;
// labels carry over unchanged, |output| == |input|.
LabeledDataset build_reconstructed_dataset(const MaeModel& mae, const LabeledDataset& data,
                                           const RngHandle& rng);

// Minimizes the mean squared difference between the victim's probability
// vector on original sample i and the auxiliary's on reconstructed sample
// i. The auxiliary starts from random initialization and shares the
// victim's architecture; the victim is never touched.
AuxiliaryModel train_auxiliary(const Classifier& victim, const MaeModel& mae,
                               const LabeledDataset& originals, const LabeledDataset& recon_data,
                               const TrainConfig& cfg);

// Mean squared component difference between two probability vectors.
double deviation_error(const std::vector<float>& p_victim, const std::vector<float>& p_aux);

// Mean deviation loss of `aux` against `victim` over paired datasets;
// the quantity train_auxiliary minimizes.
double auxiliary_loss(const Classifier& victim, const Classifier& aux, const LabeledDataset& originals,
                      const LabeledDataset& recon_data);

}  // namespace same
