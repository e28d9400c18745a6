#pragma once

#include <cmath>
#include <vector>

#include "same/nn/matrix.hpp"

namespace same::nn {

// Row-wise stable softmax.
template <typename T>
void softmax_rows(const Mat<T>& logits, Mat<T>& probs) {
    probs.resize(logits.rows, logits.cols);
    for (int i = 0; i < logits.rows; ++i) {
        const T* __restrict x = logits.row(i);
        T* __restrict p = probs.row(i);
        T mx = x[0];
        for (int j = 1; j < logits.cols; ++j) mx = std::max(mx, x[j]);
        T denom = 0;
        for (int j = 0; j < logits.cols; ++j) {
            p[j] = std::exp(x[j] - mx);
            denom += p[j];
        }
        for (int j = 0; j < logits.cols; ++j) p[j] /= denom;
    }
}

// Mean cross-entropy to integer labels; fills dlogits = (p - onehot)/batch.
template <typename T>
double softmax_xent(const Mat<T>& logits, const std::vector<int>& labels, Mat<T>& dlogits) {
    Mat<T> probs;
    softmax_rows(logits, probs);
    const int batch = logits.rows;
    double loss = 0.0;
    dlogits = probs;
    for (int i = 0; i < batch; ++i) {
        const int y = labels[i];
        loss -= std::log(std::max(static_cast<double>(probs(i, y)), 1e-30));
        dlogits(i, y) -= T(1);
    }
    for (auto& v : dlogits.v) v /= T(batch);
    return loss / batch;
}

// Mean cross-entropy to explicit target distributions (e.g. uniform).
template <typename T>
double softmax_xent_targets(const Mat<T>& logits, const Mat<T>& targets, Mat<T>& dlogits) {
    Mat<T> probs;
    softmax_rows(logits, probs);
    const int batch = logits.rows;
    double loss = 0.0;
    for (int i = 0; i < batch; ++i) {
        for (int j = 0; j < logits.cols; ++j) {
            loss -= static_cast<double>(targets(i, j)) *
                    std::log(std::max(static_cast<double>(probs(i, j)), 1e-30));
        }
    }
    dlogits = probs;
    for (std::size_t k = 0; k < dlogits.v.size(); ++k) {
        dlogits.v[k] = (dlogits.v[k] - targets.v[k]) / T(batch);
    }
    return loss / batch;
}

// Mean over rows of the mean squared component difference between
// softmax(logits) and target probability vectors. Gradient flows through
// the softmax.
template <typename T>
double softmax_mse(const Mat<T>& logits, const Mat<T>& targets, Mat<T>& dlogits) {
    Mat<T> probs;
    softmax_rows(logits, probs);
    const int batch = logits.rows, classes = logits.cols;
    double loss = 0.0;
    Mat<T> dp(batch, classes);
    for (int i = 0; i < batch; ++i) {
        for (int j = 0; j < classes; ++j) {
            double diff = static_cast<double>(probs(i, j)) - static_cast<double>(targets(i, j));
            loss += diff * diff;
            dp(i, j) = T(2.0 * diff / (batch * classes));
        }
    }
    // softmax jacobian: dlogit_j = p_j * (dp_j - sum_i dp_i p_i)
    dlogits.resize(batch, classes);
    for (int i = 0; i < batch; ++i) {
        T dot = 0;
        for (int j = 0; j < classes; ++j) dot += dp(i, j) * probs(i, j);
        for (int j = 0; j < classes; ++j) dlogits(i, j) = probs(i, j) * (dp(i, j) - dot);
    }
    return loss / (batch * classes);
}

// Plain MSE, mean over every entry; dpred = 2 (pred - target) / n.
template <typename T>
double mse(const Mat<T>& pred, const Mat<T>& target, Mat<T>& dpred) {
    const double n = static_cast<double>(pred.v.size());
    double loss = 0.0;
    dpred.resize(pred.rows, pred.cols);
    for (std::size_t i = 0; i < pred.v.size(); ++i) {
        double diff = static_cast<double>(pred.v[i]) - static_cast<double>(target.v[i]);
        loss += diff * diff;
        dpred.v[i] = T(2.0 * diff / n);
    }
    return loss / n;
}

}  // namespace same::nn
