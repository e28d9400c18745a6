#pragma once

#include <optional>
#include <string>
#include <vector>

#include "same/nn/layers.hpp"
#include "same/tensor.hpp"

namespace same {

enum class Arch { conv3, mlp };

Arch parse_arch(const std::string& name);
std::string arch_name(Arch a);

enum class LossKind { cross_entropy, mse_soft_targets };

struct TrainConfig {
    int epochs = 5;
    int batch_size = 64;
    double learning_rate = 0.05;
    std::uint64_t seed = 0;
    LossKind loss = LossKind::cross_entropy;
};

struct TrainManifest {
    std::uint64_t seed = 0;
    int epochs = 0;
    std::string dataset_fingerprint;
};

// Small supervised classifier; serves as victim, substitute, auxiliary and
// baseline model. conv3 is two conv+pool blocks (32, 64 filters, kernel 3)
// plus one fully connected layer; mlp is a 128-unit single hidden layer.
// A frozen instance is safe for concurrent predict calls.
class Classifier {
public:
    Classifier() = default;
    Classifier(Arch arch, Shape input_shape, int num_classes, const RngHandle& init_rng);

    Arch arch() const { return arch_; }
    Shape input_shape() const { return input_shape_; }
    int num_classes() const { return num_classes_; }
    const TrainManifest& manifest() const { return manifest_; }
    TrainManifest& manifest() { return manifest_; }

    // Probability vector: non-negative, sums to 1 within 1e-5.
    std::vector<float> predict(const ImageTensor& x) const;
    // One row of probabilities per sample.
    nn::Mat<float> predict_batch(const std::vector<ImageTensor>& xs) const;
    nn::Mat<float> logits_infer(const nn::Mat<float>& x) const;

    // d(logit of class_index)/d(input pixels). Mutates training caches;
    // caller must hold exclusive access.
    std::vector<float> input_gradient(const ImageTensor& x, int class_index);

    // Training-path forward/backward, exclusive access required.
    void forward_train(const nn::Mat<float>& x, nn::Mat<float>& logits);
    void backward_train(const nn::Mat<float>& dlogits);
    nn::ParamRefs<float> params();

    // SHA-256 of the serialized float32 weight payload.
    std::string weight_hash() const;
    std::vector<std::uint8_t> weight_payload() const;

    void save(const std::string& base_path) const;
    static Classifier load(const std::string& base_path,
                           const std::string& format_tag = "same-classifier-checkpoint");

private:
    void check_input(const ImageTensor& x) const;
    nn::Mat<float> batch_matrix(const std::vector<ImageTensor>& xs) const;

    Arch arch_ = Arch::conv3;
    Shape input_shape_;
    int num_classes_ = 0;
    TrainManifest manifest_;

    // conv3 stack
    nn::Conv3x3<float> conv1_, conv2_;
    nn::ReLU<float> relu1_, relu2_;
    nn::MaxPool2<float> pool1_, pool2_;
    nn::Dense<float> fc_;
    // mlp stack
    nn::Dense<float> fc1_, fc2_;
    nn::ReLU<float> relu_mlp_;
};

// Lowest index wins ties.
int argmax_class(const float* probs, int n);
int argmax_class(const std::vector<float>& probs);

Classifier train_classifier(Arch arch, const LabeledDataset& data, const TrainConfig& cfg);

// Regression onto per-sample probability targets (one row per sample);
// the loop behind substitute and auxiliary training.
Classifier train_on_soft_targets(Arch arch, Shape input_shape, const std::vector<ImageTensor>& samples,
                                 const nn::Mat<float>& target_probs, const TrainConfig& cfg,
                                 const std::string& dataset_fingerprint);

// Continues soft-target training on an existing model in place.
void train_soft_continue(Classifier& model, const std::vector<ImageTensor>& samples,
                         const nn::Mat<float>& target_probs, const TrainConfig& cfg);

double evaluate_accuracy(const Classifier& model, const LabeledDataset& data);

}  // namespace same
