#pragma once

#include <functional>
#include <optional>

#include "same/classifier.hpp"
#include "same/tensor.hpp"

namespace same {

enum class AttackKind { knockoff, jbda, dfme };
enum class KnockoffStrategy { random, balanced };
enum class DfmeMode { noise, generator };

AttackKind parse_attack_kind(const std::string& name);
std::string attack_kind_name(AttackKind k);

struct AttackConfig {
    AttackKind kind = AttackKind::knockoff;
    int budget = 1000;
    std::uint64_t seed = 0;

    // knockoff
    KnockoffStrategy knockoff_strategy = KnockoffStrategy::random;
    std::string proxy_id;

    // jbda
    int jbda_seed_count = 200;
    double jbda_step = 0.1;
    int jbda_max_rounds = 16;  // safety cap; budget normally stops first
    TrainConfig jbda_substitute_cfg{.epochs = 5, .batch_size = 32, .learning_rate = 0.05, .seed = 0,
                                    .loss = LossKind::mse_soft_targets};

    // dfme
    DfmeMode dfme_mode = DfmeMode::noise;
    int dfme_iterations = 200;
    int dfme_batch = 8;
    int dfme_directions = 8;
};

struct QuerySet {
    std::vector<ImageTensor> samples;
    AttackConfig provenance;
    std::optional<nn::Mat<float>> victim_responses;  // one row per sample

    std::size_t size() const { return samples.size(); }
};

// Black-box prediction oracle: query in, probability vector out.
using VictimOracle = std::function<std::vector<float>(const ImageTensor&)>;

VictimOracle oracle_of(const Classifier& victim);

// Fills qs.victim_responses by querying the oracle on every sample.
void query_victim(QuerySet& qs, const VictimOracle& oracle);

// Budget-many proxy samples without replacement. `balanced` takes
// floor(B / num_classes) per proxy class and tops up randomly.
QuerySet knockoff_select(const LabeledDataset& proxy, const AttackConfig& cfg);

// Jacobian-style augmentation: each round perturbs every current sample by
// jbda_step * sign(d substitute-predicted-class-logit / d input), doubling
// the set until the budget is reached (earliest-generated kept on
// truncation). The substitute is retrained on the victim's responses once
// per round. Returned responses cover every retained sample.
QuerySet jbda_augment(const LabeledDataset& seeds, Classifier& substitute, const VictimOracle& victim,
                      const AttackConfig& cfg);

struct DfmeTrace {
    // Mean victim/substitute disagreement per iteration, measured on that
    // iteration's fresh generator batch after the substitute update.
    std::vector<double> disagreement;
};

// Data-free synthesis. noise: budget-many i.i.d. uniform tensors.
// generator: a small latent-to-image network climbs a forward-difference
// estimate of victim/substitute disagreement through the black-box oracle;
// the returned set holds the latest generated queries.
QuerySet dfme_synthesize(const VictimOracle& victim, Shape input_shape, const AttackConfig& cfg,
                         DfmeTrace* trace = nullptr);

// Substitute training on recorded victim responses (probability targets).
Classifier train_substitute(const QuerySet& queries, const nn::Mat<float>& victim_responses, Arch arch,
                            const TrainConfig& cfg);

// Fraction of samples on which both models pick the same class.
double agreement(const Classifier& a, const Classifier& b, const LabeledDataset& data);

}  // namespace same
