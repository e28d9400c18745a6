#include "same/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "same/common.hpp"
#include "same/nn/losses.hpp"
#include "same/nn/optim.hpp"

namespace same {

using nn::Mat;

AttackKind parse_attack_kind(const std::string& name) {
    if (name == "knockoff") return AttackKind::knockoff;
    if (name == "jbda") return AttackKind::jbda;
    if (name == "dfme") return AttackKind::dfme;
    throw ValueError("unknown attack kind: " + name);
}

std::string attack_kind_name(AttackKind k) {
    switch (k) {
        case AttackKind::knockoff: return "knockoff";
        case AttackKind::jbda: return "jbda";
        case AttackKind::dfme: return "dfme";
    }
    return "?";
}

VictimOracle oracle_of(const Classifier& victim) {
    return [&victim](const ImageTensor& x) { return victim.predict(x); };
}

void query_victim(QuerySet& qs, const VictimOracle& oracle) {
    if (qs.samples.empty()) throw ValueError("query_victim: empty query set");
    auto first = oracle(qs.samples.front());
    Mat<float> responses(static_cast<int>(qs.size()), static_cast<int>(first.size()));
    std::memcpy(responses.row(0), first.data(), sizeof(float) * first.size());
    for (std::size_t i = 1; i < qs.size(); ++i) {
        auto p = oracle(qs.samples[i]);
        if (p.size() != first.size()) {
            throw ConsistencyError("query_victim: oracle response length changed at query " +
                                   std::to_string(i));
        }
        std::memcpy(responses.row(static_cast<int>(i)), p.data(), sizeof(float) * p.size());
    }
    qs.victim_responses = std::move(responses);
}

QuerySet knockoff_select(const LabeledDataset& proxy, const AttackConfig& cfg) {
    if (cfg.budget < 1) throw ValueError("knockoff_select: budget must be >= 1");
    if (proxy.size() < static_cast<std::size_t>(cfg.budget)) {
        throw ValueError("knockoff_select: proxy smaller than budget");
    }
    auto g = RngHandle(cfg.seed, "knockoff").engine();
    std::vector<std::size_t> chosen;

    if (cfg.knockoff_strategy == KnockoffStrategy::random) {
        std::vector<std::size_t> idx(proxy.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        shuffle_indices(idx, g);
        chosen.assign(idx.begin(), idx.begin() + cfg.budget);
    } else {
        const int per_class = cfg.budget / proxy.num_classes;
        std::vector<std::vector<std::size_t>> by_class(proxy.num_classes);
        for (std::size_t i = 0; i < proxy.size(); ++i) by_class[proxy.labels[i]].push_back(i);
        std::vector<std::size_t> leftovers;
        for (int c = 0; c < proxy.num_classes; ++c) {
            auto& pool = by_class[c];
            if (static_cast<int>(pool.size()) < per_class) {
                throw ValueError("knockoff_select: proxy class " + std::to_string(c) +
                                 " has too few samples for the balanced strategy");
            }
            shuffle_indices(pool, g);
            chosen.insert(chosen.end(), pool.begin(), pool.begin() + per_class);
            leftovers.insert(leftovers.end(), pool.begin() + per_class, pool.end());
        }
        shuffle_indices(leftovers, g);
        const int remainder = cfg.budget - per_class * proxy.num_classes;
        chosen.insert(chosen.end(), leftovers.begin(), leftovers.begin() + remainder);
    }

    QuerySet qs;
    qs.provenance = cfg;
    qs.samples.reserve(chosen.size());
    for (std::size_t i : chosen) qs.samples.push_back(proxy.samples[i]);
    return qs;
}

namespace {

ImageTensor perturb_sign_step(const ImageTensor& x, const std::vector<float>& grad, double step) {
    ImageTensor out = x;
    for (std::size_t i = 0; i < out.pixels.size(); ++i) {
        float s = grad[i] > 0.0f ? 1.0f : (grad[i] < 0.0f ? -1.0f : 0.0f);
        out.pixels[i] = std::clamp(out.pixels[i] + static_cast<float>(step) * s, 0.0f, 1.0f);
    }
    return out;
}

}  // namespace

QuerySet jbda_augment(const LabeledDataset& seeds, Classifier& substitute, const VictimOracle& victim,
                      const AttackConfig& cfg) {
    if (seeds.empty()) throw ValueError("jbda_augment: need at least one seed");
    if (cfg.budget < static_cast<int>(seeds.size())) {
        throw ValueError("jbda_augment: budget smaller than seed count");
    }
    if (!(cfg.jbda_step >= 0.0 && cfg.jbda_step <= 1.0)) {
        throw ValueError("jbda_augment: step must be in [0, 1]");
    }

    std::vector<ImageTensor> current = seeds.samples;
    std::vector<std::vector<float>> responses;
    responses.reserve(cfg.budget);
    auto ask = [&](const ImageTensor& x) { responses.push_back(victim(x)); };
    for (const auto& x : current) ask(x);

    auto retrain = [&]() {
        Mat<float> targets(static_cast<int>(current.size()), static_cast<int>(responses.front().size()));
        for (std::size_t i = 0; i < current.size(); ++i) {
            std::memcpy(targets.row(static_cast<int>(i)), responses[i].data(),
                        sizeof(float) * responses[i].size());
        }
        QuerySet qs;
        qs.samples = current;
        qs.provenance = cfg;
        TrainConfig tc = cfg.jbda_substitute_cfg;
        tc.seed = cfg.seed;
        substitute = train_substitute(qs, targets, substitute.arch(), tc);
    };
    retrain();

    int rounds = 0;
    while (static_cast<int>(current.size()) < cfg.budget && rounds < cfg.jbda_max_rounds) {
        ++rounds;
        const std::size_t base = current.size();
        for (std::size_t i = 0; i < base && static_cast<int>(current.size()) < cfg.budget; ++i) {
            int cls = argmax_class(substitute.predict(current[i]));
            auto grad = substitute.input_gradient(current[i], cls);
            ImageTensor xp = perturb_sign_step(current[i], grad, cfg.jbda_step);
            current.push_back(xp);
            ask(current.back());
        }
        retrain();
    }

    QuerySet qs;
    qs.provenance = cfg;
    qs.samples = std::move(current);
    Mat<float> resp(static_cast<int>(qs.size()), static_cast<int>(responses.front().size()));
    for (std::size_t i = 0; i < qs.size(); ++i) {
        std::memcpy(resp.row(static_cast<int>(i)), responses[i].data(), sizeof(float) * responses[i].size());
    }
    qs.victim_responses = std::move(resp);
    return qs;
}

namespace {

// Latent-to-image generator used by the data-free synthesis mode.
struct Generator {
    nn::Dense<float> fc1, fc2;
    nn::ReLU<float> act;
    Mat<float> pre_cache;

    Generator(int latent, int hidden, int out, std::mt19937_64& g)
        : fc1(latent, hidden, g), fc2(hidden, out, g) {}

    nn::ParamRefs<float> params() {
        nn::ParamRefs<float> ps;
        fc1.params(ps);
        fc2.params(ps);
        return ps;
    }

    // sigmoid keeps pixels in [0,1]
    void forward(const Mat<float>& z, Mat<float>& images) {
        Mat<float> a, b;
        fc1.forward(z, a);
        act.forward(a, b);
        fc2.forward(b, pre_cache);
        images.resize(pre_cache.rows, pre_cache.cols);
        for (std::size_t i = 0; i < images.v.size(); ++i) {
            images.v[i] = 1.0f / (1.0f + std::exp(-pre_cache.v[i]));
        }
    }

    void backward(const Mat<float>& dimages) {
        Mat<float> dpre(dimages.rows, dimages.cols);
        for (std::size_t i = 0; i < dpre.v.size(); ++i) {
            float s = 1.0f / (1.0f + std::exp(-pre_cache.v[i]));
            dpre.v[i] = dimages.v[i] * s * (1.0f - s);
        }
        Mat<float> a, b;
        fc2.backward(dpre, a);
        act.backward(a, b);
        fc1.backward(b, a);
    }
};

double disagreement(const std::vector<float>& victim_p, const std::vector<float>& sub_p) {
    double s = 0.0;
    for (std::size_t i = 0; i < victim_p.size(); ++i) {
        double d = static_cast<double>(victim_p[i]) - static_cast<double>(sub_p[i]);
        s += d * d;
    }
    return s / static_cast<double>(victim_p.size());
}

}  // namespace

QuerySet dfme_synthesize(const VictimOracle& victim, Shape input_shape, const AttackConfig& cfg,
                         DfmeTrace* trace) {
    if (cfg.budget < 1) throw ValueError("dfme_synthesize: budget must be >= 1");
    QuerySet qs;
    qs.provenance = cfg;

    if (cfg.dfme_mode == DfmeMode::noise) {
        auto g = RngHandle(cfg.seed, "dfme-noise").engine();
        qs.samples.reserve(cfg.budget);
        for (int i = 0; i < cfg.budget; ++i) {
            ImageTensor t(input_shape);
            for (auto& v : t.pixels) v = uniform01f(g);
            qs.samples.push_back(std::move(t));
        }
        return qs;
    }

    // Generator mode. The generator chases victim/substitute disagreement;
    // d(disagreement)/d(image) is estimated with forward differences
    // through the oracle, then backpropagated analytically.
    const int pixels = input_shape.pixel_count();
    const int latent = 16;
    auto g_init = RngHandle(cfg.seed, "dfme-gen-init").engine();
    Generator gen(latent, 128, pixels, g_init);
    auto gen_ps = gen.params();
    nn::Adam<float> gen_opt(1e-2);

    const int num_classes = static_cast<int>(victim(ImageTensor(input_shape)).size());
    Classifier substitute(Arch::mlp, input_shape, num_classes, RngHandle(cfg.seed, "dfme-sub-init"));
    auto sub_ps = substitute.params();
    nn::SgdMomentum<float> sub_opt(0.05, 0.9);

    auto g = RngHandle(cfg.seed, "dfme-gen").engine();
    const double fd_eps = 1e-2;
    std::vector<ImageTensor> recent;

    auto to_image = [&](const float* row) {
        ImageTensor t(input_shape);
        std::copy(row, row + pixels, t.pixels.begin());
        return t;
    };

    for (int iter = 0; iter < cfg.dfme_iterations; ++iter) {
        Mat<float> z(cfg.dfme_batch, latent);
        for (auto& v : z.v) v = static_cast<float>(normal(g));
        Mat<float> images;
        gen.forward(z, images);

        // Substitute update on victim labels for the fresh queries.
        Mat<float> victim_probs(cfg.dfme_batch, num_classes);
        for (int b = 0; b < cfg.dfme_batch; ++b) {
            ImageTensor img = to_image(images.row(b));
            auto p = victim(img);
            std::memcpy(victim_probs.row(b), p.data(), sizeof(float) * p.size());
            recent.push_back(std::move(img));
        }
        if (static_cast<int>(recent.size()) > cfg.budget) {
            recent.erase(recent.begin(), recent.end() - cfg.budget);
        }
        Mat<float> logits, dlogits;
        substitute.forward_train(images, logits);
        nn::softmax_mse(logits, victim_probs, dlogits);
        nn::zero_grads(sub_ps);
        substitute.backward_train(dlogits);
        sub_opt.step(sub_ps);

        if (trace) {
            double mean_dis = 0.0;
            for (int b = 0; b < cfg.dfme_batch; ++b) {
                ImageTensor img = to_image(images.row(b));
                std::vector<float> vp(num_classes);
                std::memcpy(vp.data(), victim_probs.row(b), sizeof(float) * num_classes);
                mean_dis += disagreement(vp, substitute.predict(img));
            }
            trace->disagreement.push_back(mean_dis / cfg.dfme_batch);
        }

        // Zeroth-order image gradient of the disagreement, ascended.
        Mat<float> dimages(cfg.dfme_batch, pixels);
        for (int b = 0; b < cfg.dfme_batch; ++b) {
            ImageTensor base_img = to_image(images.row(b));
            double base = disagreement(victim(base_img), substitute.predict(base_img));
            for (int dir = 0; dir < cfg.dfme_directions; ++dir) {
                ImageTensor probe = base_img;
                std::vector<float> u(pixels);
                double norm = 0.0;
                for (int j = 0; j < pixels; ++j) {
                    u[j] = static_cast<float>(normal(g));
                    norm += static_cast<double>(u[j]) * u[j];
                }
                norm = std::sqrt(std::max(norm, 1e-12));
                for (int j = 0; j < pixels; ++j) {
                    u[j] = static_cast<float>(u[j] / norm);
                    probe.pixels[j] = std::clamp(probe.pixels[j] + static_cast<float>(fd_eps) * u[j], 0.0f, 1.0f);
                }
                double shifted = disagreement(victim(probe), substitute.predict(probe));
                float coef = static_cast<float>((shifted - base) / fd_eps);
                for (int j = 0; j < pixels; ++j) dimages(b, j) += coef * u[j];
            }
        }
        // Ascend: negate the estimate and let the optimizer minimize.
        for (auto& v : dimages.v) v = -v / static_cast<float>(cfg.dfme_directions);
        nn::zero_grads(gen_ps);
        gen.backward(dimages);
        gen_opt.step(gen_ps);
    }

    if (static_cast<int>(recent.size()) > cfg.budget) {
        recent.erase(recent.begin(), recent.end() - cfg.budget);
    }
    qs.samples = std::move(recent);
    return qs;
}

Classifier train_substitute(const QuerySet& queries, const Mat<float>& victim_responses, Arch arch,
                            const TrainConfig& cfg) {
    if (queries.samples.empty()) throw ValueError("train_substitute: empty query set");
    if (static_cast<int>(queries.size()) != victim_responses.rows) {
        throw ConsistencyError("train_substitute: query/response count mismatch");
    }
    TrainConfig tc = cfg;
    tc.loss = LossKind::mse_soft_targets;
    return train_on_soft_targets(arch, queries.samples.front().shape, queries.samples, victim_responses, tc,
                                 "queryset-" + std::to_string(queries.size()));
}

double agreement(const Classifier& a, const Classifier& b, const LabeledDataset& data) {
    if (data.empty()) throw ValueError("agreement: empty dataset");
    if (!(a.input_shape() == b.input_shape()) || a.num_classes() != b.num_classes()) {
        throw ShapeError("agreement: models are not comparable");
    }
    long same_count = 0;
    for (const auto& x : data.samples) {
        same_count += (argmax_class(a.predict(x)) == argmax_class(b.predict(x)));
    }
    return static_cast<double>(same_count) / static_cast<double>(data.size());
}

}  // namespace same
