#include <doctest.h>

#include <filesystem>
#include <set>

#include "same/common.hpp"
#include "same/mae.hpp"
#include "same/synthetic.hpp"

using namespace same;
namespace fs = std::filesystem;

namespace {

MaeArchConfig small_arch() {
    MaeArchConfig a;
    a.patch_size = 7;
    a.embed_dim = 32;
    a.depth = 2;
    a.heads = 2;
    a.decoder_depth = 1;
    return a;
}

}  // namespace

TEST_CASE("patchify geometry and exact inverse") {
    auto d = render_glyph_dataset(GlyphSet::digits, 1, {1, 28, 28}, RngHandle(1, "patch"));
    auto patches = patchify(d.samples[0], 7);
    CHECK(patches.rows == 16);
    CHECK(patches.cols == 49);
    auto back = unpatchify(patches, d.samples[0].shape, 7);
    CHECK(back.pixels == d.samples[0].pixels);

    CHECK_THROWS_AS(patchify(d.samples[0], 5), ShapeError);
}

TEST_CASE("sample_mask counts and determinism") {
    auto m = sample_mask(16, 0.75, RngHandle(2, "mask"));
    CHECK(m.num_patches() == 16);
    CHECK(m.num_masked() == 12);

    auto all_kept = sample_mask(16, 0.0, RngHandle(2, "mask"));
    CHECK(all_kept.num_masked() == 0);

    auto m2 = sample_mask(16, 0.75, RngHandle(2, "mask"));
    CHECK(m.keep == m2.keep);
    auto m3 = sample_mask(16, 0.75, RngHandle(3, "mask"));
    CHECK(m.keep != m3.keep);

    CHECK_THROWS_AS(sample_mask(16, 1.0, RngHandle(0, "x")), ValueError);
    CHECK_THROWS_AS(sample_mask(16, -0.1, RngHandle(0, "x")), ValueError);

    // floor semantics
    CHECK(sample_mask(10, 0.55, RngHandle(4, "m")).num_masked() == 5);
    CHECK(sample_mask(10, 0.59, RngHandle(4, "m")).num_masked() == 5);
}

TEST_CASE("reconstruct contracts on an untrained model") {
    auto d = render_glyph_dataset(GlyphSet::digits, 2, {1, 28, 28}, RngHandle(5, "rc"));
    MaeModel mae(d.shape(), small_arch(), RngHandle(6, "mae-init"));

    SUBCASE("mask ratio zero with the copy rule reproduces the input exactly") {
        auto mask = sample_mask(16, 0.0, RngHandle(7, "m"));
        auto xhat = mae.reconstruct(d.samples[0], mask);
        CHECK(xhat.pixels == d.samples[0].pixels);
    }
    SUBCASE("output is clipped, shaped, and deterministic") {
        auto mask = sample_mask(16, 0.75, RngHandle(7, "m"));
        auto xhat = mae.reconstruct(d.samples[0], mask);
        xhat.validate();  // shape + [0,1]
        auto xhat2 = mae.reconstruct(d.samples[0], mask);
        CHECK(xhat.pixels == xhat2.pixels);
    }
    SUBCASE("shape mismatch is an error") {
        ImageTensor wrong({1, 14, 14});
        auto mask = sample_mask(16, 0.5, RngHandle(7, "m"));
        CHECK_THROWS_AS(mae.reconstruct(wrong, mask), ShapeError);
        auto short_mask = sample_mask(4, 0.5, RngHandle(7, "m"));
        CHECK_THROWS_AS(mae.reconstruct(d.samples[0], short_mask), ShapeError);
    }
}

TEST_CASE("reconstruction_error formula") {
    ImageTensor a({1, 1, 2});
    ImageTensor b({1, 1, 2});
    CHECK(reconstruction_error(a, b) == doctest::Approx(0.0));

    ImageTensor ones({1, 2, 2}, 1.0f), zeros({1, 2, 2}, 0.0f);
    CHECK(reconstruction_error(ones, zeros) == doctest::Approx(1.0));

    a.pixels = {1.0f, 0.0f};
    b.pixels = {0.5f, 0.5f};
    CHECK(reconstruction_error(a, b) == doctest::Approx(0.25));

    CHECK_THROWS_AS(reconstruction_error(ones, a), ShapeError);
}

TEST_CASE("overfit oracle: one repeated image reconstructs under 0.01") {
    auto src = render_glyph_dataset(GlyphSet::digits, 1, {1, 28, 28}, RngHandle(9, "overfit"));
    LabeledDataset rep;
    rep.name = "repeated";
    rep.num_classes = 10;
    for (int i = 0; i < 32; ++i) {
        rep.samples.push_back(src.samples[0]);
        rep.labels.push_back(src.labels[0]);
    }
    MaeTrainConfig cfg;
    cfg.epochs = 200;
    cfg.warmup_epochs = 10;
    cfg.batch_size = 32;
    cfg.learning_rate = 6e-3;
    cfg.mask_ratio = 0.5;
    cfg.seed = 12;
    auto mae = train_mae(rep, small_arch(), cfg);

    auto mask = sample_mask(mae.num_patches(), 0.5, RngHandle(77, "eval-mask"));
    auto xhat = mae.reconstruct(src.samples[0], mask);
    CHECK(reconstruction_error(src.samples[0], xhat) < 0.01);
}

TEST_CASE("training reduces the recorded loss and distinguishes noise") {
    auto digits = render_glyph_dataset(GlyphSet::digits, 800, {1, 28, 28}, RngHandle(20, "sep"));
    MaeTrainConfig cfg;
    cfg.epochs = 10;
    cfg.warmup_epochs = 2;
    cfg.batch_size = 64;
    cfg.learning_rate = 2e-3;
    cfg.mask_ratio = 0.75;
    cfg.seed = 3;

    int callbacks = 0;
    auto mae = train_mae(digits, small_arch(), cfg,
                         [&](int epoch, const MaeModel&, double loss) {
                             ++callbacks;
                             CHECK(epoch >= 1);
                             CHECK(loss >= 0.0);
                         });
    REQUIRE(static_cast<int>(mae.loss_curve().size()) == 10);
    CHECK(callbacks == 10);
    CHECK(mae.loss_curve().back() < mae.loss_curve().front());

    // Trained on digits: digit reconstruction beats uniform noise in >= 95
    // of 100 paired trials.
    auto fresh = render_glyph_dataset(GlyphSet::digits, 100, {1, 28, 28}, RngHandle(21, "sep-fresh"));
    auto noise = make_synthetic_corpus(SyntheticKind::noise, 100, {1, 28, 28}, RngHandle(22, "sep-noise"));
    int wins = 0;
    for (int i = 0; i < 100; ++i) {
        auto mc = query_mask(fresh.samples[i], mae.num_patches(), 0.75);
        auto mn = query_mask(noise.samples[i], mae.num_patches(), 0.75);
        double ec = reconstruction_error(fresh.samples[i], mae.reconstruct(fresh.samples[i], mc));
        double en = reconstruction_error(noise.samples[i], mae.reconstruct(noise.samples[i], mn));
        wins += (ec < en);
    }
    CHECK(wins >= 95);
}

TEST_CASE("train_mae determinism and preconditions") {
    auto digits = render_glyph_dataset(GlyphSet::digits, 64, {1, 28, 28}, RngHandle(30, "det"));
    MaeTrainConfig cfg;
    cfg.epochs = 2;
    cfg.warmup_epochs = 1;
    cfg.batch_size = 32;
    cfg.seed = 5;
    auto a = train_mae(digits, small_arch(), cfg);
    auto b = train_mae(digits, small_arch(), cfg);
    CHECK(a.weight_hash() == b.weight_hash());
    CHECK(a.loss_curve() == b.loss_curve());

    cfg.epochs = 0;
    CHECK_THROWS_AS(train_mae(digits, small_arch(), cfg), ValueError);
    cfg.epochs = 2;
    cfg.mask_ratio = 1.0;
    CHECK_THROWS_AS(train_mae(digits, small_arch(), cfg), ValueError);
    cfg.mask_ratio = 0.75;
    cfg.warmup_epochs = 5;
    CHECK_THROWS_AS(train_mae(digits, small_arch(), cfg), ValueError);
}

TEST_CASE("divergence aborts with a diagnostic") {
    auto digits = render_glyph_dataset(GlyphSet::digits, 64, {1, 28, 28}, RngHandle(31, "div"));
    MaeTrainConfig cfg;
    cfg.epochs = 3;
    cfg.warmup_epochs = 0;
    cfg.batch_size = 16;
    cfg.learning_rate = 1e14;  // guaranteed blow-up
    cfg.seed = 1;
    CHECK_THROWS_AS(train_mae(digits, small_arch(), cfg), Error);
}

TEST_CASE("query mask is a pure function of the query bytes") {
    auto d = render_glyph_dataset(GlyphSet::digits, 2, {1, 28, 28}, RngHandle(33, "qm"));
    auto m1 = query_mask(d.samples[0], 16, 0.75);
    auto m2 = query_mask(d.samples[0], 16, 0.75);
    CHECK(m1.keep == m2.keep);
    auto m3 = query_mask(d.samples[1], 16, 0.75);
    CHECK(m1.keep != m3.keep);  // distinct queries, distinct masks (w.h.p.)
}

TEST_CASE("mae checkpoint round trip") {
    auto digits = render_glyph_dataset(GlyphSet::digits, 48, {1, 28, 28}, RngHandle(40, "ck"));
    MaeTrainConfig cfg;
    cfg.epochs = 2;
    cfg.warmup_epochs = 1;
    cfg.batch_size = 16;
    cfg.seed = 8;
    auto mae = train_mae(digits, small_arch(), cfg);

    auto dir = fs::temp_directory_path() / "same_test_mae";
    fs::create_directories(dir);
    auto base = (dir / "mae").string();
    mae.save(base);
    auto loaded = MaeModel::load(base);
    CHECK(loaded.weight_hash() == mae.weight_hash());
    CHECK(loaded.loss_curve() == mae.loss_curve());
    CHECK(loaded.default_mask_ratio() == mae.default_mask_ratio());

    auto mask = query_mask(digits.samples[0], 16, 0.75);
    CHECK(loaded.reconstruct(digits.samples[0], mask).pixels ==
          mae.reconstruct(digits.samples[0], mask).pixels);
    CHECK(fs::exists(base + ".loss.csv"));
}
