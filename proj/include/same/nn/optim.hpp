#pragma once

#include <cmath>
#include <vector>

#include "same/nn/layers.hpp"

namespace same::nn {

template <typename T>
struct SgdMomentum {
    double lr;
    double momentum;
    std::vector<std::vector<T>> velocity;

    explicit SgdMomentum(double learning_rate, double mom = 0.9) : lr(learning_rate), momentum(mom) {}

    void step(const ParamRefs<T>& params) {
        if (velocity.empty()) {
            for (auto* p : params) velocity.emplace_back(p->w.size(), T(0));
        }
        for (std::size_t k = 0; k < params.size(); ++k) {
            auto& w = params[k]->w.v;
            auto& g = params[k]->g.v;
            auto& vel = velocity[k];
            for (std::size_t i = 0; i < w.size(); ++i) {
                vel[i] = T(momentum) * vel[i] + g[i];
                w[i] -= T(lr) * vel[i];
            }
        }
    }
};

template <typename T>
struct Adam {
    double lr;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    long t = 0;
    std::vector<std::vector<T>> m, v;

    explicit Adam(double learning_rate) : lr(learning_rate) {}

    void step(const ParamRefs<T>& params, double lr_scale = 1.0) {
        if (m.empty()) {
            for (auto* p : params) {
                m.emplace_back(p->w.size(), T(0));
                v.emplace_back(p->w.size(), T(0));
            }
        }
        ++t;
        const double bc1 = 1.0 - std::pow(beta1, t);
        const double bc2 = 1.0 - std::pow(beta2, t);
        const double alpha = lr * lr_scale * std::sqrt(bc2) / bc1;
        for (std::size_t k = 0; k < params.size(); ++k) {
            auto& w = params[k]->w.v;
            auto& g = params[k]->g.v;
            for (std::size_t i = 0; i < w.size(); ++i) {
                double gi = g[i];
                double mi = beta1 * m[k][i] + (1.0 - beta1) * gi;
                double vi = beta2 * v[k][i] + (1.0 - beta2) * gi * gi;
                m[k][i] = T(mi);
                v[k][i] = T(vi);
                w[i] -= T(alpha * mi / (std::sqrt(vi) + eps));
            }
        }
    }
};

template <typename T>
void zero_grads(const ParamRefs<T>& params) {
    for (auto* p : params) p->zero_grad();
}

}  // namespace same::nn
