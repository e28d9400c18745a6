#pragma once

#include <functional>
#include <string>
#include <vector>

#include "same/nn/layers.hpp"
#include "same/tensor.hpp"

namespace same {

// Patch-sequence masked autoencoder for sample reconstruction.

// (H/p)*(W/p) rows of p*p*channels values; row index is the grid position
// (row-major), values ordered (channel, y, x) within the patch.
nn::Mat<float> patchify(const ImageTensor& x, int patch_size);
ImageTensor unpatchify(const nn::Mat<float>& patches, Shape shape, int patch_size);

// keep[i] = 1 means patch i is visible to the encoder. Exactly
// floor(mask_ratio * num_patches) entries are zero, chosen uniformly.
struct MaskMatrix {
    std::vector<std::uint8_t> keep;
    double mask_ratio = 0.0;
    std::uint64_t rng_seed = 0;

    int num_patches() const { return static_cast<int>(keep.size()); }
    int num_masked() const;
    int num_kept() const { return num_patches() - num_masked(); }
};

MaskMatrix sample_mask(int num_patches, double mask_ratio, const RngHandle& rng);

struct MaeArchConfig {
    int patch_size = 7;
    int embed_dim = 64;
    int depth = 4;
    int heads = 4;
    int decoder_depth = 2;

    // Decoder is half the encoder width with half the heads, the usual
    // asymmetric autoencoder layout.
    int decoder_dim() const { return std::max(8, embed_dim / 2); }
    int decoder_heads() const { return std::max(1, heads / 2); }
};

struct MaeTrainConfig {
    int epochs = 50;
    int warmup_epochs = 5;
    int batch_size = 128;
    double learning_rate = 1.5e-3;
    double mask_ratio = 0.75;
    std::uint64_t seed = 0;
};

class MaeModel {
public:
    MaeModel() = default;
    MaeModel(Shape input_shape, const MaeArchConfig& arch, const RngHandle& init_rng);

    Shape input_shape() const { return input_shape_; }
    const MaeArchConfig& arch() const { return arch_; }
    int num_patches() const { return num_patches_; }
    double default_mask_ratio() const { return default_mask_ratio_; }
    void set_default_mask_ratio(double ratio);
    const std::vector<double>& loss_curve() const { return loss_curve_; }
    std::uint64_t train_seed() const { return train_seed_; }
    const std::string& dataset_fingerprint() const { return dataset_fingerprint_; }

    // Masked patches are the decoder's prediction clipped to [0,1]; kept
    // patches copy the input. Deterministic given (weights, input, mask);
    // safe for concurrent callers on a frozen model.
    ImageTensor reconstruct(const ImageTensor& x, const MaskMatrix& mask) const;

    std::string weight_hash() const;
    void save(const std::string& base_path) const;
    static MaeModel load(const std::string& base_path);

    nn::ParamRefs<float> params();

private:
    friend MaeModel train_mae(const LabeledDataset&, const MaeArchConfig&, const MaeTrainConfig&,
                              const std::function<void(int, const MaeModel&, double)>&);

    // Training-path pass over a minibatch of patchified samples; returns
    // decoder predictions for every patch position. Caches live in the
    // layers, exclusive access required.
    void forward_train(const std::vector<nn::Mat<float>>& patch_batch, const std::vector<MaskMatrix>& masks,
                       nn::Mat<float>& predictions);
    void backward_train(const nn::Mat<float>& dpred);

    Shape input_shape_;
    MaeArchConfig arch_;
    int num_patches_ = 0;
    int patch_dim_ = 0;
    double default_mask_ratio_ = 0.75;
    std::vector<double> loss_curve_;
    std::uint64_t train_seed_ = 0;
    std::string dataset_fingerprint_;

    nn::Dense<float> patch_embed_;
    std::vector<nn::TransformerBlock<float>> enc_blocks_;
    nn::LayerNorm<float> enc_norm_;
    nn::Dense<float> dec_embed_;
    nn::Param<float> mask_token_;
    std::vector<nn::TransformerBlock<float>> dec_blocks_;
    nn::LayerNorm<float> dec_norm_;
    nn::Dense<float> dec_head_;
    nn::Mat<float> pos_enc_;  // (num_patches, embed_dim), fixed sinusoid
    nn::Mat<float> pos_dec_;  // (num_patches, decoder_dim)

    // scratch bookkeeping between forward_train and backward_train
    std::vector<MaskMatrix> mask_cache_;
    int batch_cache_ = 0;
    nn::Mat<float> enc_in_cache_, enc_out_cache_, dec_in_cache_;
};

// Minimizes reconstruction error on masked patches; records the epoch-mean
// per-pixel reconstruction error (clipped predictions) as the loss curve.
// on_epoch, when set, runs after every epoch with (epoch index, model,
// epoch-mean loss). Aborts with Error on divergence.
MaeModel train_mae(const LabeledDataset& data, const MaeArchConfig& arch, const MaeTrainConfig& cfg,
                   const std::function<void(int, const MaeModel&, double)>& on_epoch = nullptr);

// Mean squared per-pixel difference.
double reconstruction_error(const ImageTensor& x, const ImageTensor& xhat);

// Scoring-time mask: seeded from a digest of the query bytes, so repeat
// queries reconstruct identically.
MaskMatrix query_mask(const ImageTensor& x, int num_patches, double mask_ratio);

}  // namespace same
