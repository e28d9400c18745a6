#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>

#include "same/archive.hpp"
#include "same/common.hpp"
#include "same/idx.hpp"
#include "same/synthetic.hpp"
#include "same/tensor.hpp"

using namespace same;
namespace fs = std::filesystem;

namespace {

fs::path test_dir() {
    auto d = fs::temp_directory_path() / "same_test_data";
    fs::create_directories(d);
    return d;
}

void write_be(std::ofstream& out, std::uint32_t v) {
    char b[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16), static_cast<char>(v >> 8),
                 static_cast<char>(v)};
    out.write(b, 4);
}

// Hand-assembled IDX pair, raw bytes supplied by the caller.
void write_idx_pair(const fs::path& img_path, const fs::path& lab_path, std::uint32_t img_magic,
                    std::uint32_t count, std::uint32_t rows, std::uint32_t cols,
                    const std::vector<std::uint8_t>& pixel_bytes, std::uint32_t label_count,
                    const std::vector<std::uint8_t>& label_bytes) {
    std::ofstream img(img_path, std::ios::binary);
    write_be(img, img_magic);
    write_be(img, count);
    write_be(img, rows);
    write_be(img, cols);
    img.write(reinterpret_cast<const char*>(pixel_bytes.data()),
              static_cast<std::streamsize>(pixel_bytes.size()));
    std::ofstream lab(lab_path, std::ios::binary);
    write_be(lab, 0x00000801);
    write_be(lab, label_count);
    lab.write(reinterpret_cast<const char*>(label_bytes.data()),
              static_cast<std::streamsize>(label_bytes.size()));
}

}  // namespace

TEST_CASE("idx load: scaling, shape, and byte endpoints") {
    auto dir = test_dir();
    auto img = dir / "ok-images", lab = dir / "ok-labels";
    // 3 images of 2x2: all zeros, all 255, mixed.
    std::vector<std::uint8_t> pixels = {0, 0, 0, 0, 255, 255, 255, 255, 0, 128, 255, 64};
    write_idx_pair(img, lab, 0x00000803, 3, 2, 2, pixels, 3, {0, 1, 2});

    auto d = load_idx_dataset(img.string(), lab.string());
    REQUIRE(d.size() == 3);
    CHECK(d.shape() == Shape{1, 2, 2});
    CHECK(d.num_classes == 3);
    for (float v : d.samples[0].pixels) CHECK(v == 0.0f);
    for (float v : d.samples[1].pixels) CHECK(v == 1.0f);
    CHECK(d.samples[2].pixels[1] == doctest::Approx(128.0 / 255.0));
    d.validate();
}

TEST_CASE("idx load error taxonomy") {
    auto dir = test_dir();
    auto img = dir / "bad-images", lab = dir / "bad-labels";

    SUBCASE("bad magic is a format error") {
        write_idx_pair(img, lab, 0x00000802, 1, 2, 2, std::vector<std::uint8_t>(4, 0), 1, {0});
        CHECK_THROWS_AS(load_idx_dataset(img.string(), lab.string()), FormatError);
    }
    SUBCASE("count mismatch is a consistency error") {
        write_idx_pair(img, lab, 0x00000803, 2, 2, 2, std::vector<std::uint8_t>(8, 0), 1, {0});
        CHECK_THROWS_AS(load_idx_dataset(img.string(), lab.string()), ConsistencyError);
    }
    SUBCASE("truncated pixel data is an I/O error") {
        write_idx_pair(img, lab, 0x00000803, 2, 2, 2, std::vector<std::uint8_t>(5, 0), 2, {0, 1});
        CHECK_THROWS_AS(load_idx_dataset(img.string(), lab.string()), IoError);
    }
    SUBCASE("missing file is an I/O error") {
        CHECK_THROWS_AS(load_idx_dataset((dir / "nope").string(), lab.string()), IoError);
    }
}

TEST_CASE("idx round trip through export") {
    auto d = render_glyph_dataset(GlyphSet::digits, 20, {1, 28, 28}, RngHandle(3, "idx-rt"));
    auto dir = test_dir();
    write_idx_dataset(d, (dir / "rt-images").string(), (dir / "rt-labels").string());
    auto back = load_idx_dataset((dir / "rt-images").string(), (dir / "rt-labels").string());
    REQUIRE(back.size() == d.size());
    CHECK(back.labels == d.labels);
    // Pixels go through byte quantization; agreement within half a step.
    for (std::size_t i = 0; i < d.size(); ++i) {
        for (std::size_t p = 0; p < d.samples[i].pixels.size(); ++p) {
            CHECK(std::abs(back.samples[i].pixels[p] - d.samples[i].pixels[p]) <= 0.5f / 255.0f + 1e-6f);
        }
    }
}

TEST_CASE("loaded pixels stay in range over random byte buffers") {
    auto dir = test_dir();
    auto g = RngHandle(11, "idx-fuzz").engine();
    for (int trial = 0; trial < 10; ++trial) {
        std::uint32_t count = 1 + static_cast<std::uint32_t>(uniform_below(g, 6));
        std::uint32_t rows = 2 + static_cast<std::uint32_t>(uniform_below(g, 7));
        std::uint32_t cols = 2 + static_cast<std::uint32_t>(uniform_below(g, 7));
        std::vector<std::uint8_t> pixels(count * rows * cols);
        for (auto& b : pixels) b = static_cast<std::uint8_t>(uniform_below(g, 256));
        std::vector<std::uint8_t> labels(count);
        for (auto& b : labels) b = static_cast<std::uint8_t>(uniform_below(g, 10));
        auto img = dir / "fuzz-images", lab = dir / "fuzz-labels";
        write_idx_pair(img, lab, 0x00000803, count, rows, cols, pixels, count, labels);
        auto d = load_idx_dataset(img.string(), lab.string());
        d.validate();  // includes the [0,1] range check
        CHECK(d.size() == count);
    }
}

TEST_CASE("split_dataset sizes, determinism, and partition property") {
    auto d = render_glyph_dataset(GlyphSet::digits, 100, {1, 14, 14}, RngHandle(5, "split-src"));

    auto parts = split_dataset(d, {0.8, 0.2}, RngHandle(5, "split"));
    REQUIRE(parts.size() == 2);
    CHECK(parts[0].size() == 80);
    CHECK(parts[1].size() == 20);

    auto parts2 = split_dataset(d, {0.8, 0.2}, RngHandle(5, "split"));
    for (int k = 0; k < 2; ++k) {
        CHECK(parts[k].labels == parts2[k].labels);
        for (std::size_t i = 0; i < parts[k].size(); ++i) {
            CHECK(parts[k].samples[i].pixels == parts2[k].samples[i].pixels);
        }
    }

    // Union equals the input multiset, intersection empty: compare content keys.
    std::map<std::uint64_t, int> counts;
    for (const auto& t : d.samples) counts[t.content_key()]++;
    for (const auto& part : parts) {
        for (const auto& t : part.samples) counts[t.content_key()]--;
    }
    for (const auto& [k, v] : counts) CHECK(v == 0);
}

TEST_CASE("split_dataset preconditions") {
    auto d = render_glyph_dataset(GlyphSet::digits, 10, {1, 14, 14}, RngHandle(5, "split-pre"));
    CHECK_THROWS_AS(split_dataset(d, {0.5, 0.6}, RngHandle(0, "s")), ValueError);
    CHECK_THROWS_AS(split_dataset(d, {1.0, -0.0}, RngHandle(0, "s")), ValueError);
    LabeledDataset empty;
    empty.num_classes = 10;
    CHECK_THROWS_AS(split_dataset(empty, {0.5, 0.5}, RngHandle(0, "s")), ValueError);
    // A fraction too small for one sample must not silently produce an empty part.
    CHECK_THROWS_AS(split_dataset(d, {0.999, 0.001}, RngHandle(0, "s")), ValueError);
}

TEST_CASE("synthetic noise corpus") {
    auto d = make_synthetic_corpus(SyntheticKind::noise, 10, {1, 28, 28}, RngHandle(1, "noise"));
    REQUIRE(d.size() == 10);
    d.validate();
    CHECK(d.shape() == Shape{1, 28, 28});

    auto d2 = make_synthetic_corpus(SyntheticKind::noise, 10, {1, 28, 28}, RngHandle(1, "noise"));
    for (std::size_t i = 0; i < d.size(); ++i) CHECK(d.samples[i].pixels == d2.samples[i].pixels);

    CHECK_THROWS_AS(make_synthetic_corpus(SyntheticKind::noise, 0, {1, 28, 28}, RngHandle(1, "x")), ValueError);
}

TEST_CASE("glyph corpora are deterministic, in range, and label-complete") {
    for (auto set : {GlyphSet::digits, GlyphSet::letters}) {
        auto d = render_glyph_dataset(set, 200, {1, 28, 28}, RngHandle(8, "glyphs"));
        d.validate();
        CHECK(d.num_classes == 10);
        std::vector<int> seen(10, 0);
        for (int y : d.labels) seen[y]++;
        for (int c = 0; c < 10; ++c) CHECK(seen[c] > 0);

        auto d2 = render_glyph_dataset(set, 200, {1, 28, 28}, RngHandle(8, "glyphs"));
        CHECK(d.fingerprint() == d2.fingerprint());
    }
    auto shifted = make_synthetic_corpus(SyntheticKind::shifted_digits, 50, {1, 28, 28}, RngHandle(8, "sh"));
    shifted.validate();
    CHECK(shifted.num_classes == 10);
}

TEST_CASE("archive round trip is bit-identical") {
    auto d = render_glyph_dataset(GlyphSet::digits, 25, {1, 28, 28}, RngHandle(13, "arch"));
    auto base = (test_dir() / "arch_rt").string();
    save_dataset_archive(d, base, "seed=13 stream=arch");
    auto back = load_dataset_archive(base);
    REQUIRE(back.size() == d.size());
    CHECK(back.labels == d.labels);
    CHECK(back.num_classes == d.num_classes);
    for (std::size_t i = 0; i < d.size(); ++i) {
        CHECK(back.samples[i].pixels == d.samples[i].pixels);  // exact float equality
    }
    CHECK(back.fingerprint() == d.fingerprint());
    CHECK(archive_provenance(base) == "seed=13 stream=arch");
}
