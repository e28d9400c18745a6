#include <doctest.h>

#include <filesystem>

#include "same/auxiliary.hpp"
#include "same/common.hpp"
#include "same/synthetic.hpp"

using namespace same;
namespace fs = std::filesystem;

namespace {

// Shared small pipeline: mlp victim + lightly trained autoencoder.
struct Fixture {
    LabeledDataset train, heldout;
    Classifier victim;
    MaeModel mae;

    Fixture() {
        auto digits = render_glyph_dataset(GlyphSet::digits, 1100, {1, 28, 28}, RngHandle(50, "aux-data"));
        auto parts = split_dataset(digits, {0.8, 0.2}, RngHandle(50, "aux-split"));
        train = std::move(parts[0]);
        heldout = std::move(parts[1]);

        TrainConfig vc;
        vc.epochs = 4;
        vc.batch_size = 64;
        vc.learning_rate = 0.1;
        vc.seed = 51;
        victim = train_classifier(Arch::mlp, train, vc);

        MaeArchConfig arch;
        arch.patch_size = 7;
        arch.embed_dim = 32;
        arch.depth = 2;
        arch.heads = 2;
        arch.decoder_depth = 1;
        MaeTrainConfig mc;
        mc.epochs = 30;
        mc.warmup_epochs = 3;
        mc.batch_size = 64;
        mc.learning_rate = 3e-3;
        mc.mask_ratio = 0.75;
        mc.seed = 52;
        mae = train_mae(train, arch, mc);
    }
};

Fixture& fixture() {
    static Fixture f;
    return f;
}

}  // namespace

TEST_CASE("identity-stub reconstruction reproduces the dataset") {
    auto& f = fixture();
    MaeModel stub = f.mae;
    stub.set_default_mask_ratio(0.0);  // nothing masked + copy rule = identity
    auto recon = build_reconstructed_dataset(stub, f.heldout, RngHandle(1, "recon"));
    REQUIRE(recon.size() == f.heldout.size());
    CHECK(recon.labels == f.heldout.labels);
    for (std::size_t i = 0; i < recon.size(); ++i) {
        CHECK(recon.samples[i].pixels == f.heldout.samples[i].pixels);
    }
}

TEST_CASE("reconstructed dataset is deterministic and label-preserving") {
    auto& f = fixture();
    auto a = build_reconstructed_dataset(f.mae, f.heldout, RngHandle(2, "recon"));
    auto b = build_reconstructed_dataset(f.mae, f.heldout, RngHandle(2, "recon"));
    CHECK(a.fingerprint() == b.fingerprint());
    CHECK(a.labels == f.heldout.labels);
    CHECK(a.size() == f.heldout.size());

    auto c = build_reconstructed_dataset(f.mae, f.heldout, RngHandle(3, "recon"));
    CHECK(a.fingerprint() != c.fingerprint());  // fresh masks per rng

    LabeledDataset empty;
    empty.num_classes = 10;
    CHECK_THROWS_AS(build_reconstructed_dataset(f.mae, empty, RngHandle(0, "x")), ValueError);
}

TEST_CASE("auxiliary training mirrors the victim and never touches it") {
    auto& f = fixture();
    const std::string victim_hash = f.victim.weight_hash();
    // Reconstructions at the deployed scoring ratio.
    MaeModel mae = f.mae;
    mae.set_default_mask_ratio(0.5);
    auto recon = build_reconstructed_dataset(mae, f.train, RngHandle(4, "recon-train"));

    TrainConfig ac;
    ac.epochs = 12;
    ac.batch_size = 64;
    ac.learning_rate = 0.3;
    ac.seed = 53;
    auto aux = train_auxiliary(f.victim, mae, f.train, recon, ac);

    CHECK(f.victim.weight_hash() == victim_hash);  // frozen throughout
    CHECK(aux.victim_hash == victim_hash);
    CHECK(aux.mae_hash == mae.weight_hash());
    CHECK(aux.model.arch() == f.victim.arch());
    CHECK(aux.model.num_classes() == f.victim.num_classes());

    // Trained deviation loss beats an untrained auxiliary on held-out data.
    auto recon_heldout = build_reconstructed_dataset(mae, f.heldout, RngHandle(5, "recon-ho"));
    Classifier untrained(f.victim.arch(), f.victim.input_shape(), f.victim.num_classes(),
                         RngHandle(99, "untrained"));
    double trained_loss = auxiliary_loss(f.victim, aux.model, f.heldout, recon_heldout);
    double untrained_loss = auxiliary_loss(f.victim, untrained, f.heldout, recon_heldout);
    CHECK(trained_loss < untrained_loss);

    // Argmax agreement between victim on originals and auxiliary on
    // reconstructions stays high on clean data. The full-scale pipeline in
    // the acceptance suite holds this at 0.9; this tenth-scale fixture
    // gets a proportionally looser floor.
    long agree = 0;
    for (std::size_t i = 0; i < f.heldout.size(); ++i) {
        agree += (argmax_class(f.victim.predict(f.heldout.samples[i])) ==
                  argmax_class(aux.model.predict(recon_heldout.samples[i])));
    }
    CHECK(static_cast<double>(agree) / f.heldout.size() >= 0.75);

    // Checkpoint round trip keeps provenance.
    auto dir = fs::temp_directory_path() / "same_test_aux";
    fs::create_directories(dir);
    aux.save((dir / "aux").string());
    auto loaded = AuxiliaryModel::load((dir / "aux").string());
    CHECK(loaded.model.weight_hash() == aux.model.weight_hash());
    CHECK(loaded.victim_hash == aux.victim_hash);
    CHECK(loaded.mae_hash == aux.mae_hash);
}

TEST_CASE("auxiliary training with matching predictions is an exact no-op") {
    auto& f = fixture();
    // F_aux initialized to the victim, reconstructions equal to originals:
    // every gradient is exactly zero, so weights cannot move.
    Classifier aux_copy = f.victim;
    nn::Mat<float> targets(static_cast<int>(f.heldout.size()), f.victim.num_classes());
    for (std::size_t i = 0; i < f.heldout.size(); ++i) {
        auto p = f.victim.predict(f.heldout.samples[i]);
        for (int j = 0; j < f.victim.num_classes(); ++j) targets(static_cast<int>(i), j) = p[j];
    }
    TrainConfig tc;
    tc.epochs = 1;
    tc.batch_size = 32;
    tc.learning_rate = 0.5;
    tc.loss = LossKind::mse_soft_targets;
    train_soft_continue(aux_copy, f.heldout.samples, targets, tc);
    CHECK(aux_copy.weight_hash() == f.victim.weight_hash());

    CHECK(auxiliary_loss(f.victim, f.victim, f.heldout, f.heldout) == doctest::Approx(0.0));
}

TEST_CASE("deviation_error formula and errors") {
    CHECK(deviation_error({0.2f, 0.8f}, {0.2f, 0.8f}) == doctest::Approx(0.0));
    CHECK(deviation_error({1.0f, 0.0f}, {0.0f, 1.0f}) == doctest::Approx(1.0));
    CHECK(deviation_error({0.6f, 0.4f}, {0.4f, 0.6f}) == doctest::Approx(0.04).epsilon(1e-6));
    CHECK_THROWS_AS(deviation_error({0.5f, 0.5f}, {1.0f}), ShapeError);
    CHECK_THROWS_AS(deviation_error({}, {}), ValueError);
}

TEST_CASE("class count mismatch is rejected") {
    auto& f = fixture();
    LabeledDataset wrong = f.heldout;
    wrong.num_classes = 7;
    for (auto& y : wrong.labels) y = y % 7;
    auto recon = wrong;
    TrainConfig tc;
    tc.epochs = 1;
    CHECK_THROWS_AS(train_auxiliary(f.victim, f.mae, wrong, recon, tc), ConsistencyError);
}
