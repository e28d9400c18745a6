#pragma once

#include <cmath>
#include <vector>

#include "same/nn/matrix.hpp"
#include "same/rng.hpp"

namespace same::nn {

template <typename T>
struct Param {
    Mat<T> w;
    Mat<T> g;

    Param() = default;
    Param(int r, int c) : w(r, c), g(r, c) {}
    void zero_grad() { g.zero(); }
};

template <typename T>
using ParamRefs = std::vector<Param<T>*>;

template <typename T>
void init_uniform(Mat<T>& w, T bound, std::mt19937_64& g) {
    for (auto& x : w.v) x = static_cast<T>((2.0 * uniform01(g) - 1.0) * static_cast<double>(bound));
}

// Glorot-style fan-based bound.
template <typename T>
void init_glorot(Param<T>& p, int fan_in, int fan_out, std::mt19937_64& g) {
    T bound = static_cast<T>(std::sqrt(6.0 / (fan_in + fan_out)));
    init_uniform(p.w, bound, g);
}

// ---------------------------------------------------------------------------
// Dense
// ---------------------------------------------------------------------------

template <typename T>
struct Dense {
    Param<T> weight;  // (in, out)
    Param<T> bias;    // (1, out)
    Mat<T> x_cache;

    Dense() = default;
    Dense(int in, int out, std::mt19937_64& g) : weight(in, out), bias(1, out) {
        init_glorot(weight, in, out, g);
    }

    void params(ParamRefs<T>& out) {
        out.push_back(&weight);
        out.push_back(&bias);
    }

    void forward(const Mat<T>& x, Mat<T>& y) {
        x_cache = x;
        infer(x, y);
    }

    void backward(const Mat<T>& dy, Mat<T>& dx) {
        gemm_tn(x_cache, dy, weight.g, true);
        col_sum(dy, bias.g, true);
        gemm_nt(dy, weight.w, dx);
    }

    // Cache-free path, safe for concurrent use on a frozen layer.
    void infer(const Mat<T>& x, Mat<T>& y) const {
        gemm_nn(x, weight.w, y);
        add_row_broadcast(y, bias.w);
    }
};

// ---------------------------------------------------------------------------
// Pointwise activations
// ---------------------------------------------------------------------------

template <typename T>
struct ReLU {
    Mat<T> x_cache;

    void forward(const Mat<T>& x, Mat<T>& y) {
        x_cache = x;
        infer(x, y);
    }

    void backward(const Mat<T>& dy, Mat<T>& dx) {
        dx = dy;
        for (std::size_t i = 0; i < dx.v.size(); ++i) {
            if (x_cache.v[i] <= T(0)) dx.v[i] = T(0);
        }
    }

    void infer(const Mat<T>& x, Mat<T>& y) const {
        y = x;
        for (auto& v : y.v) v = v > T(0) ? v : T(0);
    }
};

// Exact (erf-based) GELU; the derivative is cheap and finite-difference clean.
template <typename T>
struct GELU {
    Mat<T> x_cache;

    static T phi(T x) { return T(0.5) * (T(1) + std::erf(x * T(M_SQRT1_2))); }

    void forward(const Mat<T>& x, Mat<T>& y) {
        x_cache = x;
        infer(x, y);
    }

    void infer(const Mat<T>& x, Mat<T>& y) const {
        y = x;
        for (auto& v : y.v) v = v * phi(v);
    }

    void backward(const Mat<T>& dy, Mat<T>& dx) {
        dx = dy;
        constexpr T inv_sqrt_2pi = T(0.3989422804014326779);
        for (std::size_t i = 0; i < dx.v.size(); ++i) {
            T x = x_cache.v[i];
            T d = phi(x) + x * inv_sqrt_2pi * std::exp(T(-0.5) * x * x);
            dx.v[i] *= d;
        }
    }
};

// ---------------------------------------------------------------------------
// 3x3 convolution, stride 1, pad 1. Feature maps are (C, H, W) flattened
// per sample; activations hold one sample per row.
// ---------------------------------------------------------------------------

template <typename T>
struct Conv3x3 {
    int in_ch = 0, out_ch = 0, h = 0, w = 0;
    Param<T> weight;  // (out_ch, in_ch * 9)
    Param<T> bias;    // (1, out_ch)
    std::vector<Mat<T>> cols_cache;  // per sample: (in_ch*9, h*w)

    Conv3x3() = default;
    Conv3x3(int in_channels, int out_channels, int height, int width, std::mt19937_64& g)
        : in_ch(in_channels), out_ch(out_channels), h(height), w(width),
          weight(out_channels, in_channels * 9), bias(1, out_channels) {
        init_glorot(weight, in_channels * 9, out_channels, g);
    }

    void params(ParamRefs<T>& out) {
        out.push_back(&weight);
        out.push_back(&bias);
    }

    void im2col(const T* x, Mat<T>& cols) const {
        cols.resize(in_ch * 9, h * w);
        for (int c = 0; c < in_ch; ++c) {
            const T* plane = x + static_cast<std::size_t>(c) * h * w;
            for (int ky = 0; ky < 3; ++ky) {
                for (int kx = 0; kx < 3; ++kx) {
                    T* __restrict dst = cols.row(c * 9 + ky * 3 + kx);
                    for (int y = 0; y < h; ++y) {
                        int sy = y + ky - 1;
                        if (sy < 0 || sy >= h) {
                            for (int xx = 0; xx < w; ++xx) dst[y * w + xx] = T(0);
                            continue;
                        }
                        const T* __restrict src = plane + static_cast<std::size_t>(sy) * w;
                        for (int xx = 0; xx < w; ++xx) {
                            int sx = xx + kx - 1;
                            dst[y * w + xx] = (sx < 0 || sx >= w) ? T(0) : src[sx];
                        }
                    }
                }
            }
        }
    }

    void forward(const Mat<T>& x, Mat<T>& y) {
        const int batch = x.rows;
        y.resize(batch, out_ch * h * w);
        cols_cache.assign(batch, Mat<T>());
        Mat<T> out_s;
        for (int b = 0; b < batch; ++b) {
            im2col(x.row(b), cols_cache[b]);
            gemm_nn(weight.w, cols_cache[b], out_s);  // (out_ch, h*w)
            T* __restrict dst = y.row(b);
            for (int oc = 0; oc < out_ch; ++oc) {
                const T bv = bias.w(0, oc);
                const T* __restrict src = out_s.row(oc);
                T* __restrict d = dst + static_cast<std::size_t>(oc) * h * w;
                for (int p = 0; p < h * w; ++p) d[p] = src[p] + bv;
            }
        }
    }

    void infer(const Mat<T>& x, Mat<T>& y) const {
        const int batch = x.rows;
        y.resize(batch, out_ch * h * w);
        Mat<T> cols, out_s;
        for (int b = 0; b < batch; ++b) {
            im2col(x.row(b), cols);
            gemm_nn(weight.w, cols, out_s);
            T* __restrict dst = y.row(b);
            for (int oc = 0; oc < out_ch; ++oc) {
                const T bv = bias.w(0, oc);
                const T* __restrict src = out_s.row(oc);
                T* __restrict d = dst + static_cast<std::size_t>(oc) * h * w;
                for (int p = 0; p < h * w; ++p) d[p] = src[p] + bv;
            }
        }
    }

    void backward(const Mat<T>& dy, Mat<T>& dx) {
        const int batch = dy.rows;
        dx.resize(batch, in_ch * h * w);
        Mat<T> dy_s(out_ch, h * w), dcols;
        for (int b = 0; b < batch; ++b) {
            const T* src = dy.row(b);
            std::copy(src, src + static_cast<std::size_t>(out_ch) * h * w, dy_s.v.begin());
            gemm_nt(dy_s, cols_cache[b], weight.g, true);
            for (int oc = 0; oc < out_ch; ++oc) {
                T s = 0;
                const T* __restrict r = dy_s.row(oc);
                for (int p = 0; p < h * w; ++p) s += r[p];
                bias.g(0, oc) += s;
            }
            gemm_tn(weight.w, dy_s, dcols);  // (in_ch*9, h*w)
            // col2im scatter-add.
            T* dst = dx.row(b);
            for (int c = 0; c < in_ch; ++c) {
                T* plane = dst + static_cast<std::size_t>(c) * h * w;
                for (int ky = 0; ky < 3; ++ky) {
                    for (int kx = 0; kx < 3; ++kx) {
                        const T* __restrict srcrow = dcols.row(c * 9 + ky * 3 + kx);
                        for (int y = 0; y < h; ++y) {
                            int sy = y + ky - 1;
                            if (sy < 0 || sy >= h) continue;
                            for (int xx = 0; xx < w; ++xx) {
                                int sx = xx + kx - 1;
                                if (sx < 0 || sx >= w) continue;
                                plane[sy * w + sx] += srcrow[y * w + xx];
                            }
                        }
                    }
                }
            }
        }
    }
};

// 2x2 max pooling, stride 2; height and width must be even.
template <typename T>
struct MaxPool2 {
    int ch = 0, h = 0, w = 0;
    std::vector<int> argmax_cache;
    int batch_cache = 0;

    MaxPool2() = default;
    MaxPool2(int channels, int height, int width) : ch(channels), h(height), w(width) {}

    void forward(const Mat<T>& x, Mat<T>& y) {
        const int batch = x.rows;
        const int oh = h / 2, ow = w / 2;
        batch_cache = batch;
        y.resize(batch, ch * oh * ow);
        argmax_cache.assign(static_cast<std::size_t>(batch) * ch * oh * ow, 0);
        for (int b = 0; b < batch; ++b) {
            const T* src = x.row(b);
            T* dst = y.row(b);
            for (int c = 0; c < ch; ++c) {
                const T* plane = src + static_cast<std::size_t>(c) * h * w;
                for (int oy = 0; oy < oh; ++oy) {
                    for (int ox = 0; ox < ow; ++ox) {
                        int base = (2 * oy) * w + 2 * ox;
                        int cand[4] = {base, base + 1, base + w, base + w + 1};
                        int best = cand[0];
                        for (int k = 1; k < 4; ++k) {
                            if (plane[cand[k]] > plane[best]) best = cand[k];
                        }
                        std::size_t oidx = (static_cast<std::size_t>(b) * ch + c) * oh * ow + oy * ow + ox;
                        dst[static_cast<std::size_t>(c) * oh * ow + oy * ow + ox] = plane[best];
                        argmax_cache[oidx] = best;
                    }
                }
            }
        }
    }

    void infer(const Mat<T>& x, Mat<T>& y) const {
        const int batch = x.rows;
        const int oh = h / 2, ow = w / 2;
        y.resize(batch, ch * oh * ow);
        for (int b = 0; b < batch; ++b) {
            const T* src = x.row(b);
            T* dst = y.row(b);
            for (int c = 0; c < ch; ++c) {
                const T* plane = src + static_cast<std::size_t>(c) * h * w;
                for (int oy = 0; oy < oh; ++oy) {
                    for (int ox = 0; ox < ow; ++ox) {
                        int base = (2 * oy) * w + 2 * ox;
                        T m = plane[base];
                        m = std::max(m, plane[base + 1]);
                        m = std::max(m, plane[base + w]);
                        m = std::max(m, plane[base + w + 1]);
                        dst[static_cast<std::size_t>(c) * oh * ow + oy * ow + ox] = m;
                    }
                }
            }
        }
    }

    void backward(const Mat<T>& dy, Mat<T>& dx) {
        const int oh = h / 2, ow = w / 2;
        dx.resize(batch_cache, ch * h * w);
        for (int b = 0; b < batch_cache; ++b) {
            const T* src = dy.row(b);
            T* dst = dx.row(b);
            for (int c = 0; c < ch; ++c) {
                T* plane = dst + static_cast<std::size_t>(c) * h * w;
                for (int p = 0; p < oh * ow; ++p) {
                    std::size_t oidx = (static_cast<std::size_t>(b) * ch + c) * oh * ow + p;
                    plane[argmax_cache[oidx]] += src[static_cast<std::size_t>(c) * oh * ow + p];
                }
            }
        }
    }
};

// ---------------------------------------------------------------------------
// LayerNorm over the feature dimension; rows are tokens.
// ---------------------------------------------------------------------------

template <typename T>
struct LayerNorm {
    Param<T> gamma;  // (1, dim)
    Param<T> beta;   // (1, dim)
    Mat<T> xhat_cache;
    std::vector<T> rstd_cache;

    LayerNorm() = default;
    explicit LayerNorm(int dim) : gamma(1, dim), beta(1, dim) {
        for (auto& v : gamma.w.v) v = T(1);
    }

    void params(ParamRefs<T>& out) {
        out.push_back(&gamma);
        out.push_back(&beta);
    }

    void forward(const Mat<T>& x, Mat<T>& y) {
        const int n = x.cols;
        y.resize(x.rows, n);
        xhat_cache.resize(x.rows, n);
        rstd_cache.assign(x.rows, T(0));
        for (int i = 0; i < x.rows; ++i) {
            const T* __restrict xi = x.row(i);
            T mean = 0;
            for (int j = 0; j < n; ++j) mean += xi[j];
            mean /= T(n);
            T var = 0;
            for (int j = 0; j < n; ++j) {
                T d = xi[j] - mean;
                var += d * d;
            }
            var /= T(n);
            T rstd = T(1) / std::sqrt(var + T(1e-5));
            rstd_cache[i] = rstd;
            T* __restrict xh = xhat_cache.row(i);
            T* __restrict yi = y.row(i);
            for (int j = 0; j < n; ++j) {
                xh[j] = (xi[j] - mean) * rstd;
                yi[j] = xh[j] * gamma.w(0, j) + beta.w(0, j);
            }
        }
    }

    void infer(const Mat<T>& x, Mat<T>& y) const {
        const int n = x.cols;
        y.resize(x.rows, n);
        for (int i = 0; i < x.rows; ++i) {
            const T* __restrict xi = x.row(i);
            T mean = 0;
            for (int j = 0; j < n; ++j) mean += xi[j];
            mean /= T(n);
            T var = 0;
            for (int j = 0; j < n; ++j) {
                T d = xi[j] - mean;
                var += d * d;
            }
            var /= T(n);
            T rstd = T(1) / std::sqrt(var + T(1e-5));
            T* __restrict yi = y.row(i);
            for (int j = 0; j < n; ++j) {
                yi[j] = (xi[j] - mean) * rstd * gamma.w(0, j) + beta.w(0, j);
            }
        }
    }

    void backward(const Mat<T>& dy, Mat<T>& dx) {
        const int n = dy.cols;
        dx.resize(dy.rows, n);
        for (int i = 0; i < dy.rows; ++i) {
            const T* __restrict dyi = dy.row(i);
            const T* __restrict xh = xhat_cache.row(i);
            T* __restrict dxi = dx.row(i);
            T sum_d = 0, sum_dx = 0;
            for (int j = 0; j < n; ++j) {
                T d = dyi[j] * gamma.w(0, j);
                sum_d += d;
                sum_dx += d * xh[j];
                gamma.g(0, j) += dyi[j] * xh[j];
                beta.g(0, j) += dyi[j];
            }
            const T rstd = rstd_cache[i];
            for (int j = 0; j < n; ++j) {
                T d = dyi[j] * gamma.w(0, j);
                dxi[j] = rstd * (d - sum_d / T(n) - xh[j] * sum_dx / T(n));
            }
        }
    }
};

// ---------------------------------------------------------------------------
// Multi-head self-attention over fixed-length token groups. Input rows are
// batch*seq tokens, grouped per sample.
// ---------------------------------------------------------------------------

template <typename T>
struct MultiHeadAttention {
    int dim = 0, heads = 0;
    Dense<T> qkv;   // (dim, 3*dim)
    Dense<T> proj;  // (dim, dim)
    Mat<T> qkv_cache;
    Mat<T> attn_cache;  // rows: batch*heads*seq, cols: seq
    Mat<T> ctx_cache;
    int seq_cache = 0;

    MultiHeadAttention() = default;
    MultiHeadAttention(int d, int num_heads, std::mt19937_64& g)
        : dim(d), heads(num_heads), qkv(d, 3 * d, g), proj(d, d, g) {}

    void params(ParamRefs<T>& out) {
        qkv.params(out);
        proj.params(out);
    }

    void forward(const Mat<T>& x, int seq, Mat<T>& y) {
        const int tokens = x.rows;
        const int batch = tokens / seq;
        const int hd = dim / heads;
        const T scale = T(1) / std::sqrt(static_cast<T>(hd));
        seq_cache = seq;

        qkv.forward(x, qkv_cache);  // (tokens, 3*dim)
        attn_cache.resize(batch * heads * seq, seq);
        ctx_cache.resize(tokens, dim);

        for (int b = 0; b < batch; ++b) {
            for (int hh = 0; hh < heads; ++hh) {
                const int qoff = hh * hd, koff = dim + hh * hd, voff = 2 * dim + hh * hd;
                // scores(i,j) = q_i . k_j * scale, softmax over j
                for (int i = 0; i < seq; ++i) {
                    const T* __restrict qi = qkv_cache.row(b * seq + i) + qoff;
                    T* __restrict arow = attn_cache.row((b * heads + hh) * seq + i);
                    T mx = -std::numeric_limits<T>::infinity();
                    for (int j = 0; j < seq; ++j) {
                        const T* __restrict kj = qkv_cache.row(b * seq + j) + koff;
                        T s = 0;
                        for (int k = 0; k < hd; ++k) s += qi[k] * kj[k];
                        arow[j] = s * scale;
                        if (arow[j] > mx) mx = arow[j];
                    }
                    T denom = 0;
                    for (int j = 0; j < seq; ++j) {
                        arow[j] = std::exp(arow[j] - mx);
                        denom += arow[j];
                    }
                    for (int j = 0; j < seq; ++j) arow[j] /= denom;
                    // context
                    T* __restrict ctx = ctx_cache.row(b * seq + i) + qoff;
                    for (int k = 0; k < hd; ++k) ctx[k] = T(0);
                    for (int j = 0; j < seq; ++j) {
                        const T a = arow[j];
                        const T* __restrict vj = qkv_cache.row(b * seq + j) + voff;
                        for (int k = 0; k < hd; ++k) ctx[k] += a * vj[k];
                    }
                }
            }
        }
        proj.forward(ctx_cache, y);
    }

    void infer(const Mat<T>& x, int seq, Mat<T>& y) const {
        const int tokens = x.rows;
        const int batch = tokens / seq;
        const int hd = dim / heads;
        const T scale = T(1) / std::sqrt(static_cast<T>(hd));

        Mat<T> qkv_out;
        qkv.infer(x, qkv_out);
        Mat<T> ctx(tokens, dim);
        std::vector<T> arow(seq);
        for (int b = 0; b < batch; ++b) {
            for (int hh = 0; hh < heads; ++hh) {
                const int qoff = hh * hd, koff = dim + hh * hd, voff = 2 * dim + hh * hd;
                for (int i = 0; i < seq; ++i) {
                    const T* __restrict qi = qkv_out.row(b * seq + i) + qoff;
                    T mx = -std::numeric_limits<T>::infinity();
                    for (int j = 0; j < seq; ++j) {
                        const T* __restrict kj = qkv_out.row(b * seq + j) + koff;
                        T s = 0;
                        for (int k = 0; k < hd; ++k) s += qi[k] * kj[k];
                        arow[j] = s * scale;
                        if (arow[j] > mx) mx = arow[j];
                    }
                    T denom = 0;
                    for (int j = 0; j < seq; ++j) {
                        arow[j] = std::exp(arow[j] - mx);
                        denom += arow[j];
                    }
                    T* __restrict c = ctx.row(b * seq + i) + qoff;
                    for (int k = 0; k < hd; ++k) c[k] = T(0);
                    for (int j = 0; j < seq; ++j) {
                        const T a = arow[j] / denom;
                        const T* __restrict vj = qkv_out.row(b * seq + j) + voff;
                        for (int k = 0; k < hd; ++k) c[k] += a * vj[k];
                    }
                }
            }
        }
        proj.infer(ctx, y);
    }

    void backward(const Mat<T>& dy, Mat<T>& dx) {
        const int tokens = dy.rows;
        const int seq = seq_cache;
        const int batch = tokens / seq;
        const int hd = dim / heads;
        const T scale = T(1) / std::sqrt(static_cast<T>(hd));

        Mat<T> dctx;
        proj.backward(dy, dctx);

        Mat<T> dqkv(tokens, 3 * dim);
        std::vector<T> dscore(seq);
        for (int b = 0; b < batch; ++b) {
            for (int hh = 0; hh < heads; ++hh) {
                const int qoff = hh * hd, koff = dim + hh * hd, voff = 2 * dim + hh * hd;
                for (int i = 0; i < seq; ++i) {
                    const T* __restrict arow = attn_cache.row((b * heads + hh) * seq + i);
                    const T* __restrict dctx_i = dctx.row(b * seq + i) + qoff;
                    // dV and d(attn)
                    T dscore_dot = 0;
                    for (int j = 0; j < seq; ++j) {
                        const T* __restrict vj = qkv_cache.row(b * seq + j) + voff;
                        T* __restrict dvj = dqkv.row(b * seq + j) + voff;
                        T da = 0;
                        for (int k = 0; k < hd; ++k) {
                            da += dctx_i[k] * vj[k];
                            dvj[k] += arow[j] * dctx_i[k];
                        }
                        dscore[j] = da;
                        dscore_dot += da * arow[j];
                    }
                    // softmax backward
                    for (int j = 0; j < seq; ++j) dscore[j] = arow[j] * (dscore[j] - dscore_dot);
                    // dQ, dK
                    const T* __restrict qi = qkv_cache.row(b * seq + i) + qoff;
                    T* __restrict dqi = dqkv.row(b * seq + i) + qoff;
                    for (int j = 0; j < seq; ++j) {
                        const T ds = dscore[j] * scale;
                        const T* __restrict kj = qkv_cache.row(b * seq + j) + koff;
                        T* __restrict dkj = dqkv.row(b * seq + j) + koff;
                        for (int k = 0; k < hd; ++k) {
                            dqi[k] += ds * kj[k];
                            dkj[k] += ds * qi[k];
                        }
                    }
                }
            }
        }
        qkv.backward(dqkv, dx);
    }
};

// ---------------------------------------------------------------------------
// Pre-norm transformer block: x + MHA(LN(x)), then x + MLP(LN(x)).
// ---------------------------------------------------------------------------

template <typename T>
struct TransformerBlock {
    LayerNorm<T> ln1, ln2;
    MultiHeadAttention<T> attn;
    Dense<T> fc1, fc2;
    GELU<T> act;
    Mat<T> t_norm, t_attn, t_mid, t_fc1, t_act, t_fc2;

    TransformerBlock() = default;
    TransformerBlock(int dim, int heads, int mlp_hidden, std::mt19937_64& g)
        : ln1(dim), ln2(dim), attn(dim, heads, g), fc1(dim, mlp_hidden, g), fc2(mlp_hidden, dim, g) {}

    void params(ParamRefs<T>& out) {
        ln1.params(out);
        attn.params(out);
        ln2.params(out);
        fc1.params(out);
        fc2.params(out);
    }

    void forward(const Mat<T>& x, int seq, Mat<T>& y) {
        ln1.forward(x, t_norm);
        attn.forward(t_norm, seq, t_attn);
        t_mid = x;
        for (std::size_t i = 0; i < t_mid.v.size(); ++i) t_mid.v[i] += t_attn.v[i];

        ln2.forward(t_mid, t_norm);
        fc1.forward(t_norm, t_fc1);
        act.forward(t_fc1, t_act);
        fc2.forward(t_act, t_fc2);
        y = t_mid;
        for (std::size_t i = 0; i < y.v.size(); ++i) y.v[i] += t_fc2.v[i];
    }

    void infer(const Mat<T>& x, int seq, Mat<T>& y) const {
        Mat<T> norm, attn_out, mid, f1, a1, f2;
        ln1.infer(x, norm);
        attn.infer(norm, seq, attn_out);
        mid = x;
        for (std::size_t i = 0; i < mid.v.size(); ++i) mid.v[i] += attn_out.v[i];
        ln2.infer(mid, norm);
        fc1.infer(norm, f1);
        act.infer(f1, a1);
        fc2.infer(a1, f2);
        y = mid;
        for (std::size_t i = 0; i < y.v.size(); ++i) y.v[i] += f2.v[i];
    }

    void backward(const Mat<T>& dy, Mat<T>& dx) {
        Mat<T> d1, d2, d3;
        fc2.backward(dy, d1);
        act.backward(d1, d2);
        fc1.backward(d2, d3);
        Mat<T> dmid;
        ln2.backward(d3, dmid);
        for (std::size_t i = 0; i < dmid.v.size(); ++i) dmid.v[i] += dy.v[i];

        Mat<T> d4, d5;
        attn.backward(dmid, d4);
        ln1.backward(d4, d5);
        dx.resize(dmid.rows, dmid.cols);
        for (std::size_t i = 0; i < dx.v.size(); ++i) dx.v[i] = dmid.v[i] + d5.v[i];
    }
};

}  // namespace same::nn
