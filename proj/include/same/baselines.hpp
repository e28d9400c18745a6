#pragma once

#include "same/classifier.hpp"

namespace same {

// Outlier-exposed classifier: trained to predict labels on clean data and
// the uniform distribution on an auxiliary outlier set. Score is one minus
// the max softmax probability.
struct OeModel {
    Classifier model;
    double gamma = 0.5;
    std::string outlier_fingerprint;
};

OeModel train_oe(const LabeledDataset& data, const LabeledDataset& outliers, double gamma,
                 const TrainConfig& cfg, Arch arch = Arch::conv3);

double oe_score(const OeModel& model, const ImageTensor& x);

// Ensemble trained jointly for accuracy on clean data and prediction
// diversity on outliers. Score is the mean pairwise total-variation
// distance between submodel outputs, zero when all submodels agree.
struct EdmEnsemble {
    std::vector<Classifier> submodels;
    double gamma = 1.0;
    std::string outlier_fingerprint;
};

EdmEnsemble train_edm(const LabeledDataset& data, const LabeledDataset& outliers, int num_models,
                      double gamma, const TrainConfig& cfg, Arch arch = Arch::conv3);

double edm_score(const EdmEnsemble& ensemble, const ImageTensor& x);

// Mean pairwise total-variation distance of probability rows (one row per
// submodel); exposed for the score tests.
double mean_pairwise_tv(const std::vector<std::vector<float>>& probs);

}  // namespace same
