#include "same/classifier.hpp"

#include <cstring>
#include <fstream>

#include <json.hpp>

#include "same/common.hpp"
#include "same/nn/losses.hpp"
#include "same/nn/optim.hpp"
#include "same/sha256.hpp"

namespace same {

using nn::Mat;
using nlohmann::json;

Arch parse_arch(const std::string& name) {
    if (name == "conv3") return Arch::conv3;
    if (name == "mlp") return Arch::mlp;
    throw ValueError("unknown architecture: " + name);
}

std::string arch_name(Arch a) { return a == Arch::conv3 ? "conv3" : "mlp"; }

Classifier::Classifier(Arch arch, Shape input_shape, int num_classes, const RngHandle& init_rng)
    : arch_(arch), input_shape_(input_shape), num_classes_(num_classes) {
    if (num_classes < 2) throw ValueError("Classifier: need at least 2 classes");
    auto g = init_rng.engine();
    const int c = input_shape.channels, h = input_shape.height, w = input_shape.width;
    if (arch == Arch::conv3) {
        if (h % 4 != 0 || w % 4 != 0) {
            throw ShapeError("conv3 needs height and width divisible by 4, got " + input_shape.str());
        }
        conv1_ = nn::Conv3x3<float>(c, 32, h, w, g);
        pool1_ = nn::MaxPool2<float>(32, h, w);
        conv2_ = nn::Conv3x3<float>(32, 64, h / 2, w / 2, g);
        pool2_ = nn::MaxPool2<float>(64, h / 2, w / 2);
        fc_ = nn::Dense<float>(64 * (h / 4) * (w / 4), num_classes, g);
    } else {
        fc1_ = nn::Dense<float>(c * h * w, 128, g);
        fc2_ = nn::Dense<float>(128, num_classes, g);
    }
}

void Classifier::check_input(const ImageTensor& x) const {
    if (!(x.shape == input_shape_)) {
        throw ShapeError("Classifier: input shape " + x.shape.str() + " != model shape " + input_shape_.str());
    }
}

Mat<float> Classifier::batch_matrix(const std::vector<ImageTensor>& xs) const {
    Mat<float> m(static_cast<int>(xs.size()), input_shape_.pixel_count());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        check_input(xs[i]);
        std::memcpy(m.row(static_cast<int>(i)), xs[i].pixels.data(), xs[i].pixels.size() * sizeof(float));
    }
    return m;
}

Mat<float> Classifier::logits_infer(const Mat<float>& x) const {
    Mat<float> a, b;
    if (arch_ == Arch::conv3) {
        conv1_.infer(x, a);
        relu1_.infer(a, b);
        pool1_.infer(b, a);
        conv2_.infer(a, b);
        relu2_.infer(b, a);
        pool2_.infer(a, b);
        Mat<float> out;
        fc_.infer(b, out);
        return out;
    }
    fc1_.infer(x, a);
    relu_mlp_.infer(a, b);
    Mat<float> out;
    fc2_.infer(b, out);
    return out;
}

std::vector<float> Classifier::predict(const ImageTensor& x) const {
    check_input(x);
    Mat<float> in(1, input_shape_.pixel_count());
    std::memcpy(in.row(0), x.pixels.data(), x.pixels.size() * sizeof(float));
    Mat<float> probs;
    nn::softmax_rows(logits_infer(in), probs);
    return std::vector<float>(probs.v.begin(), probs.v.end());
}

Mat<float> Classifier::predict_batch(const std::vector<ImageTensor>& xs) const {
    Mat<float> probs;
    nn::softmax_rows(logits_infer(batch_matrix(xs)), probs);
    return probs;
}

void Classifier::forward_train(const Mat<float>& x, Mat<float>& logits) {
    Mat<float> a, b;
    if (arch_ == Arch::conv3) {
        conv1_.forward(x, a);
        relu1_.forward(a, b);
        pool1_.forward(b, a);
        conv2_.forward(a, b);
        relu2_.forward(b, a);
        pool2_.forward(a, b);
        fc_.forward(b, logits);
    } else {
        fc1_.forward(x, a);
        relu_mlp_.forward(a, b);
        fc2_.forward(b, logits);
    }
}

void Classifier::backward_train(const Mat<float>& dlogits) {
    Mat<float> a, b;
    if (arch_ == Arch::conv3) {
        fc_.backward(dlogits, a);
        pool2_.backward(a, b);
        relu2_.backward(b, a);
        conv2_.backward(a, b);
        pool1_.backward(b, a);
        relu1_.backward(a, b);
        conv1_.backward(b, a);
    } else {
        fc2_.backward(dlogits, a);
        relu_mlp_.backward(a, b);
        fc1_.backward(b, a);
    }
}

nn::ParamRefs<float> Classifier::params() {
    nn::ParamRefs<float> ps;
    if (arch_ == Arch::conv3) {
        conv1_.params(ps);
        conv2_.params(ps);
        fc_.params(ps);
    } else {
        fc1_.params(ps);
        fc2_.params(ps);
    }
    return ps;
}

std::vector<float> Classifier::input_gradient(const ImageTensor& x, int class_index) {
    check_input(x);
    if (class_index < 0 || class_index >= num_classes_) throw ValueError("input_gradient: bad class index");
    Mat<float> in(1, input_shape_.pixel_count());
    std::memcpy(in.row(0), x.pixels.data(), x.pixels.size() * sizeof(float));
    Mat<float> logits;
    forward_train(in, logits);
    Mat<float> dlogits(1, num_classes_);
    dlogits(0, class_index) = 1.0f;

    Mat<float> a, b, dx;
    if (arch_ == Arch::conv3) {
        fc_.backward(dlogits, a);
        pool2_.backward(a, b);
        relu2_.backward(b, a);
        conv2_.backward(a, b);
        pool1_.backward(b, a);
        relu1_.backward(a, b);
        conv1_.backward(b, dx);
    } else {
        fc2_.backward(dlogits, a);
        relu_mlp_.backward(a, b);
        fc1_.backward(b, dx);
    }
    // Parameter gradients were touched as a side effect; clear them so a
    // later training step does not pick them up.
    nn::zero_grads(params());
    return std::vector<float>(dx.v.begin(), dx.v.end());
}

std::vector<std::uint8_t> Classifier::weight_payload() const {
    std::vector<std::uint8_t> out;
    auto append = [&out](const Mat<float>& m) {
        const auto* p = reinterpret_cast<const std::uint8_t*>(m.v.data());
        out.insert(out.end(), p, p + m.v.size() * sizeof(float));
    };
    // const_cast is contained: params() only aggregates pointers.
    auto ps = const_cast<Classifier*>(this)->params();
    for (auto* p : ps) append(p->w);
    return out;
}

std::string Classifier::weight_hash() const {
    auto payload = weight_payload();
    return sha256_hex(payload);
}

void Classifier::save(const std::string& base_path) const {
    auto payload = weight_payload();
    json manifest = {
        {"format", "same-classifier-checkpoint"},
        {"version", 1},
        {"arch", arch_name(arch_)},
        {"input_shape", {input_shape_.channels, input_shape_.height, input_shape_.width}},
        {"num_classes", num_classes_},
        {"seed", manifest_.seed},
        {"epochs", manifest_.epochs},
        {"dataset_fingerprint", manifest_.dataset_fingerprint},
        {"content_hash", sha256_hex(payload)},
    };
    std::ofstream mf(base_path + ".json");
    if (!mf) throw IoError("checkpoint: cannot write " + base_path + ".json");
    mf << manifest.dump(2) << "\n";
    std::ofstream bin(base_path + ".bin", std::ios::binary);
    if (!bin) throw IoError("checkpoint: cannot write " + base_path + ".bin");
    bin.write(reinterpret_cast<const char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
    if (!bin) throw IoError("checkpoint: payload write failed for " + base_path);
}

Classifier Classifier::load(const std::string& base_path, const std::string& format_tag) {
    std::ifstream mf(base_path + ".json");
    if (!mf) throw IoError("checkpoint: cannot open " + base_path + ".json");
    json manifest;
    try {
        mf >> manifest;
    } catch (const json::exception& e) {
        throw FormatError("checkpoint: bad manifest " + base_path + ": " + e.what());
    }
    if (manifest.value("format", "") != format_tag) {
        throw FormatError("checkpoint: " + base_path + " does not carry format '" + format_tag + "'");
    }
    auto shape_arr = manifest.at("input_shape");
    Shape shape{shape_arr.at(0).get<int>(), shape_arr.at(1).get<int>(), shape_arr.at(2).get<int>()};
    Classifier model(parse_arch(manifest.at("arch").get<std::string>()), shape,
                     manifest.at("num_classes").get<int>(), RngHandle(0, "checkpoint-load"));
    model.manifest_.seed = manifest.value("seed", std::uint64_t{0});
    model.manifest_.epochs = manifest.value("epochs", 0);
    model.manifest_.dataset_fingerprint = manifest.value("dataset_fingerprint", "");

    std::ifstream bin(base_path + ".bin", std::ios::binary);
    if (!bin) throw IoError("checkpoint: cannot open " + base_path + ".bin");
    for (auto* p : model.params()) {
        bin.read(reinterpret_cast<char*>(p->w.v.data()),
                 static_cast<std::streamsize>(p->w.v.size() * sizeof(float)));
        if (!bin) throw IoError("checkpoint: truncated payload " + base_path + ".bin");
    }
    char extra;
    if (bin.read(&extra, 1)) throw ConsistencyError("checkpoint: trailing payload bytes in " + base_path);
    if (model.weight_hash() != manifest.value("content_hash", "")) {
        throw ConsistencyError("checkpoint: content hash mismatch for " + base_path);
    }
    return model;
}

int argmax_class(const float* probs, int n) {
    int best = 0;
    for (int j = 1; j < n; ++j) {
        if (probs[j] > probs[best]) best = j;
    }
    return best;
}

int argmax_class(const std::vector<float>& probs) {
    return argmax_class(probs.data(), static_cast<int>(probs.size()));
}

namespace {

// Shared minibatch loop. Exactly one of `labels` / `targets` is used,
// selected by cfg.loss.
void run_training(Classifier& model, const std::vector<ImageTensor>& samples, const std::vector<int>* labels,
                  const Mat<float>* targets, const TrainConfig& cfg) {
    if (samples.empty()) throw ValueError("train: empty dataset");
    if (cfg.epochs < 1) throw ValueError("train: epochs must be >= 1");
    if (cfg.learning_rate <= 0) throw ValueError("train: learning rate must be positive");
    if (cfg.batch_size < 1) throw ValueError("train: batch size must be >= 1");

    const int n = static_cast<int>(samples.size());
    const int dim = model.input_shape().pixel_count();
    auto ps = model.params();
    nn::SgdMomentum<float> opt(cfg.learning_rate, 0.9);
    RngHandle order_rng(cfg.seed, "classifier-train/order");

    std::vector<std::size_t> order(samples.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        auto g = order_rng.derive(std::to_string(epoch)).engine();
        shuffle_indices(order, g);
        for (int start = 0; start < n; start += cfg.batch_size) {
            const int bsz = std::min(cfg.batch_size, n - start);
            Mat<float> x(bsz, dim);
            std::vector<int> batch_labels(labels ? bsz : 0);
            Mat<float> batch_targets;
            if (targets) batch_targets.resize(bsz, targets->cols);
            for (int i = 0; i < bsz; ++i) {
                std::size_t src = order[start + i];
                std::memcpy(x.row(i), samples[src].pixels.data(), sizeof(float) * dim);
                if (labels) batch_labels[i] = (*labels)[src];
                if (targets) {
                    std::memcpy(batch_targets.row(i), targets->row(static_cast<int>(src)),
                                sizeof(float) * targets->cols);
                }
            }
            Mat<float> logits, dlogits;
            model.forward_train(x, logits);
            if (cfg.loss == LossKind::cross_entropy) {
                nn::softmax_xent(logits, batch_labels, dlogits);
            } else if (labels) {
                // mse-to-soft-targets against one-hot labels
                Mat<float> onehot(bsz, model.num_classes());
                for (int i = 0; i < bsz; ++i) onehot(i, batch_labels[i]) = 1.0f;
                nn::softmax_mse(logits, onehot, dlogits);
            } else {
                nn::softmax_mse(logits, batch_targets, dlogits);
            }
            nn::zero_grads(ps);
            model.backward_train(dlogits);
            opt.step(ps);
        }
    }
}

}  // namespace

Classifier train_classifier(Arch arch, const LabeledDataset& data, const TrainConfig& cfg) {
    data.validate();
    if (data.empty()) throw ValueError("train_classifier: empty dataset");
    Classifier model(arch, data.shape(), data.num_classes, RngHandle(cfg.seed, "classifier-init"));
    run_training(model, data.samples, &data.labels, nullptr, cfg);
    model.manifest() = {cfg.seed, cfg.epochs, data.fingerprint()};
    return model;
}

Classifier train_on_soft_targets(Arch arch, Shape input_shape, const std::vector<ImageTensor>& samples,
                                 const Mat<float>& target_probs, const TrainConfig& cfg,
                                 const std::string& dataset_fingerprint) {
    if (samples.empty()) throw ValueError("train_on_soft_targets: no samples");
    if (static_cast<int>(samples.size()) != target_probs.rows) {
        throw ConsistencyError("train_on_soft_targets: samples/targets count mismatch");
    }
    Classifier model(arch, input_shape, target_probs.cols, RngHandle(cfg.seed, "classifier-init"));
    TrainConfig soft_cfg = cfg;
    soft_cfg.loss = LossKind::mse_soft_targets;
    run_training(model, samples, nullptr, &target_probs, soft_cfg);
    model.manifest() = {cfg.seed, cfg.epochs, dataset_fingerprint};
    return model;
}

void train_soft_continue(Classifier& model, const std::vector<ImageTensor>& samples,
                         const nn::Mat<float>& target_probs, const TrainConfig& cfg) {
    if (static_cast<int>(samples.size()) != target_probs.rows) {
        throw ConsistencyError("train_soft_continue: samples/targets count mismatch");
    }
    TrainConfig soft_cfg = cfg;
    soft_cfg.loss = LossKind::mse_soft_targets;
    run_training(model, samples, nullptr, &target_probs, soft_cfg);
}

double evaluate_accuracy(const Classifier& model, const LabeledDataset& data) {
    if (data.empty()) throw ValueError("evaluate_accuracy: empty dataset");
    long correct = 0;
    // Batched in chunks to bound memory.
    const std::size_t chunk = 512;
    for (std::size_t start = 0; start < data.size(); start += chunk) {
        std::size_t end = std::min(data.size(), start + chunk);
        std::vector<ImageTensor> xs(data.samples.begin() + start, data.samples.begin() + end);
        Mat<float> probs = model.predict_batch(xs);
        for (std::size_t i = start; i < end; ++i) {
            int pred = argmax_class(probs.row(static_cast<int>(i - start)), probs.cols);
            correct += (pred == data.labels[i]);
        }
    }
    return static_cast<double>(correct) / static_cast<double>(data.size());
}

}  // namespace same
