#include "same/mae.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "same/common.hpp"
#include "same/nn/optim.hpp"
#include "same/sha256.hpp"

namespace same {

using nn::Mat;
using nlohmann::json;

nn::Mat<float> patchify(const ImageTensor& x, int patch_size) {
    const Shape s = x.shape;
    if (patch_size <= 0) throw ValueError("patchify: patch size must be positive");
    if (s.height % patch_size != 0 || s.width % patch_size != 0) {
        throw ShapeError("patchify: shape " + s.str() + " not divisible by patch " + std::to_string(patch_size));
    }
    const int gh = s.height / patch_size, gw = s.width / patch_size;
    const int patch_dim = patch_size * patch_size * s.channels;
    Mat<float> out(gh * gw, patch_dim);
    for (int gy = 0; gy < gh; ++gy) {
        for (int gx = 0; gx < gw; ++gx) {
            float* row = out.row(gy * gw + gx);
            int k = 0;
            for (int c = 0; c < s.channels; ++c) {
                for (int py = 0; py < patch_size; ++py) {
                    for (int px = 0; px < patch_size; ++px) {
                        row[k++] = x.at(c, gy * patch_size + py, gx * patch_size + px);
                    }
                }
            }
        }
    }
    return out;
}

ImageTensor unpatchify(const nn::Mat<float>& patches, Shape shape, int patch_size) {
    const int gh = shape.height / patch_size, gw = shape.width / patch_size;
    const int patch_dim = patch_size * patch_size * shape.channels;
    if (patches.rows != gh * gw || patches.cols != patch_dim) {
        throw ShapeError("unpatchify: patch matrix does not match shape " + shape.str());
    }
    ImageTensor out(shape);
    for (int gy = 0; gy < gh; ++gy) {
        for (int gx = 0; gx < gw; ++gx) {
            const float* row = patches.row(gy * gw + gx);
            int k = 0;
            for (int c = 0; c < shape.channels; ++c) {
                for (int py = 0; py < patch_size; ++py) {
                    for (int px = 0; px < patch_size; ++px) {
                        out.at(c, gy * patch_size + py, gx * patch_size + px) = row[k++];
                    }
                }
            }
        }
    }
    return out;
}

void MaeModel::set_default_mask_ratio(double ratio) {
    if (!(ratio >= 0.0 && ratio < 1.0)) throw ValueError("set_default_mask_ratio: ratio must be in [0,1)");
    default_mask_ratio_ = ratio;
}

int MaskMatrix::num_masked() const {
    int n = 0;
    for (auto b : keep) n += (b == 0);
    return n;
}

MaskMatrix sample_mask(int num_patches, double mask_ratio, const RngHandle& rng) {
    if (num_patches <= 0) throw ValueError("sample_mask: need at least one patch");
    if (!(mask_ratio >= 0.0 && mask_ratio < 1.0)) {
        throw ValueError("sample_mask: mask ratio must be in [0, 1)");
    }
    const int masked = static_cast<int>(std::floor(mask_ratio * num_patches));
    std::vector<int> idx(num_patches);
    for (int i = 0; i < num_patches; ++i) idx[i] = i;
    auto g = rng.engine();
    shuffle_indices(idx, g);

    MaskMatrix m;
    m.keep.assign(num_patches, 1);
    m.mask_ratio = mask_ratio;
    m.rng_seed = rng.seed();
    for (int i = 0; i < masked; ++i) m.keep[idx[i]] = 0;
    return m;
}

namespace {

Mat<float> sinusoid_table(int positions, int dim) {
    Mat<float> t(positions, dim);
    for (int pos = 0; pos < positions; ++pos) {
        for (int i = 0; i < dim; ++i) {
            double angle = pos / std::pow(10000.0, 2.0 * (i / 2) / dim);
            t(pos, i) = static_cast<float>(i % 2 == 0 ? std::sin(angle) : std::cos(angle));
        }
    }
    return t;
}

}  // namespace

MaeModel::MaeModel(Shape input_shape, const MaeArchConfig& arch, const RngHandle& init_rng)
    : input_shape_(input_shape), arch_(arch) {
    if (arch.embed_dim % arch.heads != 0) throw ValueError("MaeModel: embed_dim must divide by heads");
    if (arch.decoder_dim() % arch.decoder_heads() != 0) {
        throw ValueError("MaeModel: decoder_dim must divide by decoder heads");
    }
    if (input_shape.height % arch.patch_size != 0 || input_shape.width % arch.patch_size != 0) {
        throw ShapeError("MaeModel: input " + input_shape.str() + " not divisible by patch size");
    }
    const int gh = input_shape.height / arch.patch_size, gw = input_shape.width / arch.patch_size;
    num_patches_ = gh * gw;
    patch_dim_ = arch.patch_size * arch.patch_size * input_shape.channels;

    auto g = init_rng.engine();
    const int m = arch.embed_dim, md = arch.decoder_dim();
    patch_embed_ = nn::Dense<float>(patch_dim_, m, g);
    for (int i = 0; i < arch.depth; ++i) enc_blocks_.emplace_back(m, arch.heads, 4 * m, g);
    enc_norm_ = nn::LayerNorm<float>(m);
    dec_embed_ = nn::Dense<float>(m, md, g);
    mask_token_ = nn::Param<float>(1, md);
    nn::init_uniform(mask_token_.w, 0.02f, g);
    for (int i = 0; i < arch.decoder_depth; ++i) dec_blocks_.emplace_back(md, arch.decoder_heads(), 4 * md, g);
    dec_norm_ = nn::LayerNorm<float>(md);
    dec_head_ = nn::Dense<float>(md, patch_dim_, g);
    pos_enc_ = sinusoid_table(num_patches_, m);
    pos_dec_ = sinusoid_table(num_patches_, md);
}

nn::ParamRefs<float> MaeModel::params() {
    nn::ParamRefs<float> ps;
    patch_embed_.params(ps);
    for (auto& b : enc_blocks_) b.params(ps);
    enc_norm_.params(ps);
    dec_embed_.params(ps);
    ps.push_back(&mask_token_);
    for (auto& b : dec_blocks_) b.params(ps);
    dec_norm_.params(ps);
    dec_head_.params(ps);
    return ps;
}

void MaeModel::forward_train(const std::vector<Mat<float>>& patch_batch, const std::vector<MaskMatrix>& masks,
                             Mat<float>& predictions) {
    const int batch = static_cast<int>(patch_batch.size());
    const int kept = masks.front().num_kept();
    const int m = arch_.embed_dim, md = arch_.decoder_dim();
    batch_cache_ = batch;
    mask_cache_ = masks;

    // Encoder sees kept patches only, in ascending patch order.
    Mat<float> enc_raw(batch * kept, patch_dim_);
    for (int b = 0; b < batch; ++b) {
        int t = 0;
        for (int p = 0; p < num_patches_; ++p) {
            if (!masks[b].keep[p]) continue;
            std::memcpy(enc_raw.row(b * kept + t), patch_batch[b].row(p), sizeof(float) * patch_dim_);
            ++t;
        }
    }
    patch_embed_.forward(enc_raw, enc_in_cache_);
    for (int b = 0; b < batch; ++b) {
        int t = 0;
        for (int p = 0; p < num_patches_; ++p) {
            if (!masks[b].keep[p]) continue;
            float* row = enc_in_cache_.row(b * kept + t);
            const float* pos = pos_enc_.row(p);
            for (int j = 0; j < m; ++j) row[j] += pos[j];
            ++t;
        }
    }
    Mat<float> cur = enc_in_cache_, nxt;
    for (auto& blk : enc_blocks_) {
        blk.forward(cur, kept, nxt);
        cur = nxt;
    }
    enc_norm_.forward(cur, enc_out_cache_);

    // Decoder: embedded encoder tokens scattered to their grid slots, mask
    // token elsewhere, plus decoder position code.
    Mat<float> dec_tok;
    dec_embed_.forward(enc_out_cache_, dec_tok);
    dec_in_cache_.resize(batch * num_patches_, md);
    for (int b = 0; b < batch; ++b) {
        int t = 0;
        for (int p = 0; p < num_patches_; ++p) {
            float* row = dec_in_cache_.row(b * num_patches_ + p);
            const float* pos = pos_dec_.row(p);
            if (masks[b].keep[p]) {
                const float* src = dec_tok.row(b * kept + t);
                for (int j = 0; j < md; ++j) row[j] = src[j] + pos[j];
                ++t;
            } else {
                const float* tok = mask_token_.w.row(0);
                for (int j = 0; j < md; ++j) row[j] = tok[j] + pos[j];
            }
        }
    }
    cur = dec_in_cache_;
    for (auto& blk : dec_blocks_) {
        blk.forward(cur, num_patches_, nxt);
        cur = nxt;
    }
    Mat<float> normed;
    dec_norm_.forward(cur, normed);
    dec_head_.forward(normed, predictions);
}

void MaeModel::backward_train(const Mat<float>& dpred) {
    const int batch = batch_cache_;
    const int kept = mask_cache_.front().num_kept();
    const int md = arch_.decoder_dim();

    Mat<float> d1, d2;
    dec_head_.backward(dpred, d1);
    dec_norm_.backward(d1, d2);
    for (auto it = dec_blocks_.rbegin(); it != dec_blocks_.rend(); ++it) {
        it->backward(d2, d1);
        d2 = d1;
    }
    // Split decoder-input gradient into mask-token and encoded-token parts.
    Mat<float> ddec_tok(batch * kept, md);
    for (int b = 0; b < batch; ++b) {
        int t = 0;
        for (int p = 0; p < num_patches_; ++p) {
            const float* row = d2.row(b * num_patches_ + p);
            if (mask_cache_[b].keep[p]) {
                std::memcpy(ddec_tok.row(b * kept + t), row, sizeof(float) * md);
                ++t;
            } else {
                float* g = mask_token_.g.row(0);
                for (int j = 0; j < md; ++j) g[j] += row[j];
            }
        }
    }
    Mat<float> d3, d4;
    dec_embed_.backward(ddec_tok, d3);
    enc_norm_.backward(d3, d4);
    for (auto it = enc_blocks_.rbegin(); it != enc_blocks_.rend(); ++it) {
        it->backward(d4, d3);
        d4 = d3;
    }
    Mat<float> dunused;
    patch_embed_.backward(d4, dunused);
}

ImageTensor MaeModel::reconstruct(const ImageTensor& x, const MaskMatrix& mask) const {
    if (!(x.shape == input_shape_)) {
        throw ShapeError("reconstruct: input " + x.shape.str() + " != model shape " + input_shape_.str());
    }
    if (mask.num_patches() != num_patches_) {
        throw ShapeError("reconstruct: mask has " + std::to_string(mask.num_patches()) + " patches, expected " +
                         std::to_string(num_patches_));
    }
    const int m = arch_.embed_dim, md = arch_.decoder_dim();
    const int kept = mask.num_kept();
    Mat<float> patches = patchify(x, arch_.patch_size);

    Mat<float> dec_in(num_patches_, md);
    if (kept > 0) {
        Mat<float> enc_raw(kept, patch_dim_);
        int t = 0;
        for (int p = 0; p < num_patches_; ++p) {
            if (!mask.keep[p]) continue;
            std::memcpy(enc_raw.row(t), patches.row(p), sizeof(float) * patch_dim_);
            ++t;
        }
        Mat<float> tok, nxt;
        patch_embed_.infer(enc_raw, tok);
        t = 0;
        for (int p = 0; p < num_patches_; ++p) {
            if (!mask.keep[p]) continue;
            float* row = tok.row(t);
            const float* pos = pos_enc_.row(p);
            for (int j = 0; j < m; ++j) row[j] += pos[j];
            ++t;
        }
        for (const auto& blk : enc_blocks_) {
            blk.infer(tok, kept, nxt);
            tok = nxt;
        }
        Mat<float> enc_out, dec_tok;
        enc_norm_.infer(tok, enc_out);
        dec_embed_.infer(enc_out, dec_tok);
        t = 0;
        for (int p = 0; p < num_patches_; ++p) {
            float* row = dec_in.row(p);
            const float* pos = pos_dec_.row(p);
            if (mask.keep[p]) {
                const float* src = dec_tok.row(t);
                for (int j = 0; j < md; ++j) row[j] = src[j] + pos[j];
                ++t;
            } else {
                const float* mt = mask_token_.w.row(0);
                for (int j = 0; j < md; ++j) row[j] = mt[j] + pos[j];
            }
        }
    } else {
        for (int p = 0; p < num_patches_; ++p) {
            float* row = dec_in.row(p);
            const float* pos = pos_dec_.row(p);
            const float* mt = mask_token_.w.row(0);
            for (int j = 0; j < md; ++j) row[j] = mt[j] + pos[j];
        }
    }

    Mat<float> cur = dec_in, nxt;
    for (const auto& blk : dec_blocks_) {
        blk.infer(cur, num_patches_, nxt);
        cur = nxt;
    }
    Mat<float> normed, pred;
    dec_norm_.infer(cur, normed);
    dec_head_.infer(normed, pred);

    // Kept patches copy the input; masked patches take the clipped prediction.
    Mat<float> out_patches = patches;
    for (int p = 0; p < num_patches_; ++p) {
        if (mask.keep[p]) continue;
        float* dst = out_patches.row(p);
        const float* src = pred.row(p);
        for (int j = 0; j < patch_dim_; ++j) dst[j] = std::clamp(src[j], 0.0f, 1.0f);
    }
    return unpatchify(out_patches, input_shape_, arch_.patch_size);
}

std::string MaeModel::weight_hash() const {
    std::vector<std::uint8_t> payload;
    auto ps = const_cast<MaeModel*>(this)->params();
    for (auto* p : ps) {
        const auto* bytes = reinterpret_cast<const std::uint8_t*>(p->w.v.data());
        payload.insert(payload.end(), bytes, bytes + p->w.v.size() * sizeof(float));
    }
    return sha256_hex(payload);
}

void MaeModel::save(const std::string& base_path) const {
    json manifest = {
        {"format", "same-mae-checkpoint"},
        {"version", 1},
        {"input_shape", {input_shape_.channels, input_shape_.height, input_shape_.width}},
        {"patch_size", arch_.patch_size},
        {"embed_dim", arch_.embed_dim},
        {"depth", arch_.depth},
        {"heads", arch_.heads},
        {"decoder_depth", arch_.decoder_depth},
        {"mask_ratio", default_mask_ratio_},
        {"loss_curve", loss_curve_},
        {"train_seed", train_seed_},
        {"dataset_fingerprint", dataset_fingerprint_},
        {"content_hash", weight_hash()},
    };
    std::ofstream mf(base_path + ".json");
    if (!mf) throw IoError("mae checkpoint: cannot write " + base_path + ".json");
    mf << manifest.dump(2) << "\n";

    std::ofstream bin(base_path + ".bin", std::ios::binary);
    if (!bin) throw IoError("mae checkpoint: cannot write " + base_path + ".bin");
    auto ps = const_cast<MaeModel*>(this)->params();
    for (auto* p : ps) {
        bin.write(reinterpret_cast<const char*>(p->w.v.data()),
                  static_cast<std::streamsize>(p->w.v.size() * sizeof(float)));
    }
    if (!bin) throw IoError("mae checkpoint: payload write failed for " + base_path);

    // Loss curve as CSV alongside the checkpoint.
    std::ofstream csv(base_path + ".loss.csv");
    csv << "epoch,mean_loss\n";
    for (std::size_t i = 0; i < loss_curve_.size(); ++i) {
        csv << (i + 1) << "," << loss_curve_[i] << "\n";
    }
}

MaeModel MaeModel::load(const std::string& base_path) {
    std::ifstream mf(base_path + ".json");
    if (!mf) throw IoError("mae checkpoint: cannot open " + base_path + ".json");
    json manifest;
    try {
        mf >> manifest;
    } catch (const json::exception& e) {
        throw FormatError("mae checkpoint: bad manifest " + base_path + ": " + e.what());
    }
    if (manifest.value("format", "") != "same-mae-checkpoint") {
        throw FormatError("mae checkpoint: " + base_path + " is not an autoencoder checkpoint");
    }
    auto shape_arr = manifest.at("input_shape");
    Shape shape{shape_arr.at(0).get<int>(), shape_arr.at(1).get<int>(), shape_arr.at(2).get<int>()};
    MaeArchConfig arch;
    arch.patch_size = manifest.at("patch_size").get<int>();
    arch.embed_dim = manifest.at("embed_dim").get<int>();
    arch.depth = manifest.at("depth").get<int>();
    arch.heads = manifest.at("heads").get<int>();
    arch.decoder_depth = manifest.at("decoder_depth").get<int>();

    MaeModel model(shape, arch, RngHandle(0, "mae-load"));
    model.default_mask_ratio_ = manifest.value("mask_ratio", 0.75);
    model.loss_curve_ = manifest.value("loss_curve", std::vector<double>{});
    model.train_seed_ = manifest.value("train_seed", std::uint64_t{0});
    model.dataset_fingerprint_ = manifest.value("dataset_fingerprint", "");

    std::ifstream bin(base_path + ".bin", std::ios::binary);
    if (!bin) throw IoError("mae checkpoint: cannot open " + base_path + ".bin");
    for (auto* p : model.params()) {
        bin.read(reinterpret_cast<char*>(p->w.v.data()),
                 static_cast<std::streamsize>(p->w.v.size() * sizeof(float)));
        if (!bin) throw IoError("mae checkpoint: truncated payload " + base_path);
    }
    if (model.weight_hash() != manifest.value("content_hash", "")) {
        throw ConsistencyError("mae checkpoint: content hash mismatch for " + base_path);
    }
    return model;
}

MaeModel train_mae(const LabeledDataset& data, const MaeArchConfig& arch, const MaeTrainConfig& cfg,
                   const std::function<void(int, const MaeModel&, double)>& on_epoch) {
    data.validate();
    if (data.empty()) throw ValueError("train_mae: empty dataset");
    if (cfg.epochs < 1) throw ValueError("train_mae: epochs must be >= 1");
    if (cfg.warmup_epochs > cfg.epochs) throw ValueError("train_mae: warmup exceeds epochs");
    if (!(cfg.mask_ratio >= 0.0 && cfg.mask_ratio < 1.0)) throw ValueError("train_mae: bad mask ratio");

    MaeModel model(data.shape(), arch, RngHandle(cfg.seed, "mae-init"));
    model.default_mask_ratio_ = cfg.mask_ratio;
    model.train_seed_ = cfg.seed;
    model.dataset_fingerprint_ = data.fingerprint();
    const int n = static_cast<int>(data.size());
    const int pixels = data.shape().pixel_count();
    const int num_patches = model.num_patches();

    // Patchify once.
    std::vector<Mat<float>> patches;
    patches.reserve(n);
    for (const auto& img : data.samples) patches.push_back(patchify(img, arch.patch_size));

    auto ps = model.params();
    nn::Adam<float> opt(cfg.learning_rate);
    RngHandle train_rng(cfg.seed, "mae-train");

    std::vector<std::size_t> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        auto order_g = train_rng.derive("order/" + std::to_string(epoch)).engine();
        shuffle_indices(order, order_g);
        RngHandle mask_rng = train_rng.derive("mask/" + std::to_string(epoch));
        const double lr_scale =
            cfg.warmup_epochs > 0 && epoch < cfg.warmup_epochs
                ? static_cast<double>(epoch + 1) / cfg.warmup_epochs
                : 1.0;

        double epoch_loss = 0.0;
        long batches = 0;
        for (int start = 0; start < n; start += cfg.batch_size) {
            const int bsz = std::min(cfg.batch_size, n - start);
            std::vector<Mat<float>> batch(bsz);
            std::vector<MaskMatrix> masks(bsz);
            for (int i = 0; i < bsz; ++i) {
                batch[i] = patches[order[start + i]];
                masks[i] = sample_mask(num_patches, cfg.mask_ratio,
                                       mask_rng.derive(std::to_string(start + i)));
            }
            Mat<float> pred;
            model.forward_train(batch, masks, pred);

            // Per-pixel mean squared error on masked patches; kept patches
            // contribute zero because the reconstruction copies them.
            Mat<float> dpred(pred.rows, pred.cols);
            double batch_loss = 0.0;
            const float gscale = 2.0f / (static_cast<float>(pixels) * bsz);
            for (int b = 0; b < bsz; ++b) {
                for (int p = 0; p < num_patches; ++p) {
                    float* dst = dpred.row(b * num_patches + p);
                    if (masks[b].keep[p]) continue;  // rows start zeroed
                    const float* got = pred.row(b * num_patches + p);
                    const float* want = batch[b].row(p);
                    for (int j = 0; j < pred.cols; ++j) {
                        float diff = got[j] - want[j];
                        float clipped = std::clamp(got[j], 0.0f, 1.0f) - want[j];
                        batch_loss += static_cast<double>(clipped) * clipped / pixels;
                        dst[j] = gscale * diff;
                    }
                }
            }
            batch_loss /= bsz;
            if (!std::isfinite(batch_loss)) {
                throw Error("train_mae: loss diverged (non-finite) at epoch " + std::to_string(epoch + 1) +
                            ", batch " + std::to_string(batches));
            }
            epoch_loss += batch_loss * bsz;
            ++batches;

            nn::zero_grads(ps);
            model.backward_train(dpred);
            opt.step(ps, lr_scale);
        }
        model.loss_curve_.push_back(epoch_loss / n);
        if (on_epoch) on_epoch(epoch + 1, model, epoch_loss / n);
    }
    return model;
}

double reconstruction_error(const ImageTensor& x, const ImageTensor& xhat) {
    if (!(x.shape == xhat.shape)) throw ShapeError("reconstruction_error: shape mismatch");
    double sum = 0.0;
    for (std::size_t i = 0; i < x.pixels.size(); ++i) {
        double d = static_cast<double>(x.pixels[i]) - static_cast<double>(xhat.pixels[i]);
        sum += d * d;
    }
    return sum / static_cast<double>(x.pixels.size());
}

MaskMatrix query_mask(const ImageTensor& x, int num_patches, double mask_ratio) {
    std::uint64_t digest = fnv1a64(x.pixels.data(), x.pixels.size() * sizeof(float));
    return sample_mask(num_patches, mask_ratio, RngHandle(digest, "query-mask"));
}

}  // namespace same
