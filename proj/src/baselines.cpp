#include "same/baselines.hpp"

#include <cmath>
#include <cstring>
#include <set>

#include "same/common.hpp"
#include "same/nn/losses.hpp"
#include "same/nn/optim.hpp"

namespace same {

using nn::Mat;

namespace {

void check_disjoint(const LabeledDataset& data, const LabeledDataset& outliers) {
    std::set<std::uint64_t> keys;
    for (const auto& t : data.samples) keys.insert(t.content_key());
    for (const auto& t : outliers.samples) {
        if (keys.count(t.content_key())) {
            throw ConsistencyError("outlier set overlaps the training data");
        }
    }
}

Mat<float> to_batch(const std::vector<ImageTensor>& samples, const std::vector<std::size_t>& order,
                    std::size_t start, std::size_t count, int dim) {
    Mat<float> x(static_cast<int>(count), dim);
    for (std::size_t i = 0; i < count; ++i) {
        std::memcpy(x.row(static_cast<int>(i)), samples[order[start + i]].pixels.data(),
                    sizeof(float) * dim);
    }
    return x;
}

}  // namespace

OeModel train_oe(const LabeledDataset& data, const LabeledDataset& outliers, double gamma,
                 const TrainConfig& cfg, Arch arch) {
    if (gamma < 0.0) throw ValueError("train_oe: gamma must be non-negative");
    data.validate();

    OeModel oe;
    oe.gamma = gamma;
    if (gamma == 0.0) {
        // The outlier term vanishes; identical to plain supervised training.
        oe.model = train_classifier(arch, data, cfg);
        oe.outlier_fingerprint = "";
        return oe;
    }
    outliers.validate();
    if (outliers.empty()) throw ValueError("train_oe: empty outlier set");
    check_disjoint(data, outliers);

    Classifier model(arch, data.shape(), data.num_classes, RngHandle(cfg.seed, "classifier-init"));
    auto ps = model.params();
    nn::SgdMomentum<float> opt(cfg.learning_rate, 0.9);
    RngHandle rng(cfg.seed, "oe-train");
    const int n = static_cast<int>(data.size());
    const int dim = data.shape().pixel_count();

    std::vector<std::size_t> order(data.size()), out_order(outliers.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (std::size_t i = 0; i < out_order.size(); ++i) out_order[i] = i;
    std::size_t out_pos = 0;
    auto out_g = rng.derive("outliers").engine();
    shuffle_indices(out_order, out_g);

    Mat<float> uniform_target(1, data.num_classes, 1.0f / data.num_classes);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        auto g = rng.derive("order/" + std::to_string(epoch)).engine();
        shuffle_indices(order, g);
        for (int start = 0; start < n; start += cfg.batch_size) {
            const int bsz = std::min(cfg.batch_size, n - start);
            Mat<float> x = to_batch(data.samples, order, start, bsz, dim);
            std::vector<int> labels(bsz);
            for (int i = 0; i < bsz; ++i) labels[i] = data.labels[order[start + i]];

            Mat<float> logits, dlogits;
            model.forward_train(x, logits);
            nn::softmax_xent(logits, labels, dlogits);
            nn::zero_grads(ps);
            model.backward_train(dlogits);

            // Outlier batch: cross-entropy to the uniform distribution,
            // weighted by gamma, accumulated into the same step.
            const int osz = std::min<std::size_t>(bsz, outliers.size());
            if (out_pos + osz > outliers.size()) {
                shuffle_indices(out_order, out_g);
                out_pos = 0;
            }
            Mat<float> xo = to_batch(outliers.samples, out_order, out_pos, osz, dim);
            out_pos += osz;
            Mat<float> targets(osz, data.num_classes);
            for (int i = 0; i < osz; ++i) {
                std::memcpy(targets.row(i), uniform_target.row(0), sizeof(float) * data.num_classes);
            }
            Mat<float> ologits, dologits;
            model.forward_train(xo, ologits);
            nn::softmax_xent_targets(ologits, targets, dologits);
            for (auto& v : dologits.v) v *= static_cast<float>(gamma);
            model.backward_train(dologits);

            opt.step(ps);
        }
    }
    model.manifest() = {cfg.seed, cfg.epochs, data.fingerprint()};
    oe.model = std::move(model);
    oe.outlier_fingerprint = outliers.fingerprint();
    return oe;
}

double oe_score(const OeModel& model, const ImageTensor& x) {
    auto p = model.model.predict(x);
    float mx = p[0];
    for (float v : p) mx = std::max(mx, v);
    return 1.0 - static_cast<double>(mx);
}

double mean_pairwise_tv(const std::vector<std::vector<float>>& probs) {
    const int n = static_cast<int>(probs.size());
    if (n < 2) throw ValueError("mean_pairwise_tv: need at least two distributions");
    double total = 0.0;
    long pairs = 0;
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            double tv = 0.0;
            for (std::size_t k = 0; k < probs[i].size(); ++k) {
                tv += std::abs(static_cast<double>(probs[i][k]) - static_cast<double>(probs[j][k]));
            }
            total += 0.5 * tv;
            ++pairs;
        }
    }
    return total / static_cast<double>(pairs);
}

EdmEnsemble train_edm(const LabeledDataset& data, const LabeledDataset& outliers, int num_models,
                      double gamma, const TrainConfig& cfg, Arch arch) {
    if (num_models < 2) throw ValueError("train_edm: need at least two submodels");
    if (gamma < 0.0) throw ValueError("train_edm: gamma must be non-negative");
    data.validate();

    EdmEnsemble ens;
    ens.gamma = gamma;

    if (gamma == 0.0) {
        // No coupling between submodels: train them independently.
        for (int i = 0; i < num_models; ++i) {
            TrainConfig sub = cfg;
            sub.seed = cfg.seed + static_cast<std::uint64_t>(i);
            ens.submodels.push_back(train_classifier(arch, data, sub));
        }
        return ens;
    }
    outliers.validate();
    if (outliers.empty()) throw ValueError("train_edm: empty outlier set");
    check_disjoint(data, outliers);

    std::vector<Classifier> models;
    std::vector<nn::ParamRefs<float>> ps(num_models);
    std::vector<nn::SgdMomentum<float>> opts;
    for (int i = 0; i < num_models; ++i) {
        models.emplace_back(arch, data.shape(), data.num_classes,
                            RngHandle(cfg.seed + static_cast<std::uint64_t>(i), "classifier-init"));
        ps[i] = models[i].params();
        opts.emplace_back(cfg.learning_rate, 0.9);
    }

    RngHandle rng(cfg.seed, "edm-train");
    const int n = static_cast<int>(data.size());
    const int dim = data.shape().pixel_count();
    const int classes = data.num_classes;

    std::vector<std::size_t> order(data.size()), out_order(outliers.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (std::size_t i = 0; i < out_order.size(); ++i) out_order[i] = i;
    std::size_t out_pos = 0;
    auto out_g = rng.derive("outliers").engine();
    shuffle_indices(out_order, out_g);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        auto g = rng.derive("order/" + std::to_string(epoch)).engine();
        shuffle_indices(order, g);
        for (int start = 0; start < n; start += cfg.batch_size) {
            const int bsz = std::min(cfg.batch_size, n - start);
            Mat<float> x = to_batch(data.samples, order, start, bsz, dim);
            std::vector<int> labels(bsz);
            for (int i = 0; i < bsz; ++i) labels[i] = data.labels[order[start + i]];

            const int osz = std::min<std::size_t>(bsz, outliers.size());
            if (out_pos + osz > outliers.size()) {
                shuffle_indices(out_order, out_g);
                out_pos = 0;
            }
            Mat<float> xo = to_batch(outliers.samples, out_order, out_pos, osz, dim);
            out_pos += osz;

            // Task term: mean over submodels of the usual label loss.
            std::vector<Mat<float>> out_logits(num_models), out_probs(num_models);
            for (int m = 0; m < num_models; ++m) {
                Mat<float> logits, dlogits;
                models[m].forward_train(x, logits);
                nn::softmax_xent(logits, labels, dlogits);
                for (auto& v : dlogits.v) v /= static_cast<float>(num_models);
                nn::zero_grads(ps[m]);
                models[m].backward_train(dlogits);

                models[m].forward_train(xo, out_logits[m]);
                nn::softmax_rows(out_logits[m], out_probs[m]);
            }

            // Diversity term: maximize mean pairwise total variation on the
            // outlier batch. d(TV)/dp_i[k] = 0.5 * sign(p_i[k] - p_j[k]).
            const double pair_count = num_models * (num_models - 1) / 2.0;
            const float coef = static_cast<float>(gamma / (pair_count * osz));
            for (int m = 0; m < num_models; ++m) {
                Mat<float> dprobs(osz, classes);
                for (int other = 0; other < num_models; ++other) {
                    if (other == m) continue;
                    for (int i = 0; i < osz; ++i) {
                        for (int k = 0; k < classes; ++k) {
                            float diff = out_probs[m](i, k) - out_probs[other](i, k);
                            float sign = diff > 0.0f ? 1.0f : (diff < 0.0f ? -1.0f : 0.0f);
                            // ascend => negative gradient contribution
                            dprobs(i, k) -= 0.5f * coef * sign;
                        }
                    }
                }
                // through softmax
                Mat<float> dlogits(osz, classes);
                for (int i = 0; i < osz; ++i) {
                    float dot = 0.0f;
                    for (int k = 0; k < classes; ++k) dot += dprobs(i, k) * out_probs[m](i, k);
                    for (int k = 0; k < classes; ++k) {
                        dlogits(i, k) = out_probs[m](i, k) * (dprobs(i, k) - dot);
                    }
                }
                models[m].backward_train(dlogits);
            }
            for (int m = 0; m < num_models; ++m) opts[m].step(ps[m]);
        }
    }
    for (int m = 0; m < num_models; ++m) {
        models[m].manifest() = {cfg.seed + static_cast<std::uint64_t>(m), cfg.epochs, data.fingerprint()};
    }
    ens.submodels = std::move(models);
    ens.outlier_fingerprint = outliers.fingerprint();
    return ens;
}

double edm_score(const EdmEnsemble& ensemble, const ImageTensor& x) {
    if (ensemble.submodels.size() < 2) throw ValueError("edm_score: ensemble too small");
    std::vector<std::vector<float>> probs;
    probs.reserve(ensemble.submodels.size());
    for (const auto& m : ensemble.submodels) probs.push_back(m.predict(x));
    return mean_pairwise_tv(probs);
}

}  // namespace same
