#include <doctest.h>

#include "same/baselines.hpp"
#include "same/common.hpp"
#include "same/synthetic.hpp"

using namespace same;

namespace {

struct Fixture {
    LabeledDataset data, heldout, outliers, outliers_heldout;

    Fixture() {
        auto digits = render_glyph_dataset(GlyphSet::digits, 1100, {1, 16, 16}, RngHandle(90, "oe-data"));
        auto parts = split_dataset(digits, {0.8, 0.2}, RngHandle(90, "oe-split"));
        data = std::move(parts[0]);
        heldout = std::move(parts[1]);
        auto letters = render_glyph_dataset(GlyphSet::letters, 700, {1, 16, 16}, RngHandle(91, "oe-out"));
        auto oparts = split_dataset(letters, {0.8, 0.2}, RngHandle(91, "oe-osplit"));
        outliers = std::move(oparts[0]);
        outliers_heldout = std::move(oparts[1]);
    }
};

Fixture& fixture() {
    static Fixture f;
    return f;
}

Classifier constant_model(int hot_class, Shape shape, int classes) {
    Classifier m(Arch::mlp, shape, classes, RngHandle(0, "const"));
    for (auto* p : m.params()) p->w.zero();
    m.params().back()->w(0, hot_class) = 50.0f;
    return m;
}

}  // namespace

TEST_CASE("oe with gamma zero reduces exactly to plain training") {
    auto& f = fixture();
    TrainConfig cfg;
    cfg.epochs = 2;
    cfg.batch_size = 64;
    cfg.learning_rate = 0.1;
    cfg.seed = 92;
    auto oe = train_oe(f.data, f.outliers, 0.0, cfg, Arch::mlp);
    auto plain = train_classifier(Arch::mlp, f.data, cfg);
    CHECK(oe.model.weight_hash() == plain.weight_hash());
    CHECK(std::abs(evaluate_accuracy(oe.model, f.heldout) - evaluate_accuracy(plain, f.heldout)) < 1e-9);
}

TEST_CASE("oe training pushes outlier confidence down") {
    auto& f = fixture();
    TrainConfig cfg;
    cfg.epochs = 4;
    cfg.batch_size = 64;
    cfg.learning_rate = 0.1;
    cfg.seed = 93;
    auto oe = train_oe(f.data, f.outliers, 0.5, cfg, Arch::mlp);

    // Mean max-probability: held-out outliers below held-out clean data.
    auto mean_msp = [&](const LabeledDataset& d) {
        double s = 0.0;
        for (const auto& x : d.samples) s += 1.0 - oe_score(oe, x);
        return s / static_cast<double>(d.size());
    };
    CHECK(mean_msp(f.outliers_heldout) < mean_msp(f.heldout));
    CHECK(evaluate_accuracy(oe.model, f.heldout) > 0.85);

    CHECK_THROWS_AS(train_oe(f.data, f.outliers, -0.1, cfg, Arch::mlp), ValueError);
    CHECK_THROWS_AS(train_oe(f.data, f.data, 0.5, cfg, Arch::mlp), ConsistencyError);  // not disjoint
}

TEST_CASE("oe_score formula endpoints") {
    Shape s{1, 8, 8};
    OeModel uniform_model;
    uniform_model.model = Classifier(Arch::mlp, s, 10, RngHandle(0, "u"));
    for (auto* p : uniform_model.model.params()) p->w.zero();
    ImageTensor x(s, 0.3f);
    CHECK(oe_score(uniform_model, x) == doctest::Approx(0.9).epsilon(1e-6));  // 1 - 1/10

    OeModel hot;
    hot.model = constant_model(3, s, 10);
    CHECK(oe_score(hot, x) == doctest::Approx(0.0).epsilon(1e-6));

    // Bound: 0 <= score <= 1 - 1/C over random inputs.
    auto g = RngHandle(94, "bound").engine();
    OeModel rnd;
    rnd.model = Classifier(Arch::mlp, s, 10, RngHandle(95, "r"));
    for (int i = 0; i < 50; ++i) {
        ImageTensor t(s);
        for (auto& v : t.pixels) v = uniform01f(g);
        double sc = oe_score(rnd, t);
        CHECK(sc >= 0.0);
        CHECK(sc <= 0.9 + 1e-9);
    }
}

TEST_CASE("edm with gamma zero trains independent submodels") {
    auto& f = fixture();
    TrainConfig cfg;
    cfg.epochs = 1;
    cfg.batch_size = 64;
    cfg.learning_rate = 0.1;
    cfg.seed = 96;
    auto ens = train_edm(f.data, f.outliers, 2, 0.0, cfg, Arch::mlp);
    REQUIRE(ens.submodels.size() == 2);

    TrainConfig c0 = cfg, c1 = cfg;
    c1.seed = cfg.seed + 1;
    CHECK(ens.submodels[0].weight_hash() == train_classifier(Arch::mlp, f.data, c0).weight_hash());
    CHECK(ens.submodels[1].weight_hash() == train_classifier(Arch::mlp, f.data, c1).weight_hash());
    CHECK(ens.submodels[0].weight_hash() != ens.submodels[1].weight_hash());

    CHECK_THROWS_AS(train_edm(f.data, f.outliers, 1, 0.5, cfg, Arch::mlp), ValueError);
}

TEST_CASE("edm training diversifies outlier predictions") {
    auto& f = fixture();
    TrainConfig cfg;
    cfg.epochs = 4;
    cfg.batch_size = 64;
    cfg.learning_rate = 0.1;
    cfg.seed = 97;
    auto ens = train_edm(f.data, f.outliers, 2, 1.0, cfg, Arch::mlp);

    auto mean_score = [&](const LabeledDataset& d) {
        double s = 0.0;
        for (const auto& x : d.samples) s += edm_score(ens, x);
        return s / static_cast<double>(d.size());
    };
    CHECK(mean_score(f.outliers_heldout) > mean_score(f.heldout));
    for (const auto& m : ens.submodels) CHECK(evaluate_accuracy(m, f.heldout) > 0.8);
}

TEST_CASE("edm_score total-variation endpoints") {
    Shape s{1, 8, 8};
    ImageTensor x(s, 0.4f);

    EdmEnsemble same_pair;
    same_pair.submodels = {constant_model(2, s, 10), constant_model(2, s, 10)};
    CHECK(edm_score(same_pair, x) == doctest::Approx(0.0).epsilon(1e-6));

    EdmEnsemble disjoint;
    disjoint.submodels = {constant_model(0, s, 10), constant_model(1, s, 10)};
    CHECK(edm_score(disjoint, x) == doctest::Approx(1.0).epsilon(1e-6));

    // Two agreeing one-hots plus one disjoint: mean of {0, 1, 1} = 2/3.
    EdmEnsemble three;
    three.submodels = {constant_model(0, s, 10), constant_model(0, s, 10), constant_model(4, s, 10)};
    CHECK(edm_score(three, x) == doctest::Approx(2.0 / 3.0).epsilon(1e-6));

    // Permutation symmetry.
    EdmEnsemble swapped;
    swapped.submodels = {three.submodels[2], three.submodels[0], three.submodels[1]};
    CHECK(edm_score(swapped, x) == doctest::Approx(edm_score(three, x)).epsilon(1e-9));
}

TEST_CASE("mean_pairwise_tv direct values") {
    CHECK(mean_pairwise_tv({{0.5f, 0.5f}, {0.5f, 0.5f}}) == doctest::Approx(0.0));
    CHECK(mean_pairwise_tv({{1.0f, 0.0f}, {0.0f, 1.0f}}) == doctest::Approx(1.0));
    CHECK(mean_pairwise_tv({{0.7f, 0.3f}, {0.4f, 0.6f}}) == doctest::Approx(0.3).epsilon(1e-6));
    CHECK_THROWS_AS(mean_pairwise_tv({{1.0f, 0.0f}}), ValueError);
}
