#pragma once

#include "same/rng.hpp"
#include "same/tensor.hpp"

namespace same {

enum class SyntheticKind {
    noise,           // i.i.d. uniform-[0,1] pixels
    shifted_digits,  // digit glyphs under a widened geometric transform distribution
};

// Deterministic synthetic corpora. `noise` supplies data-free attack inputs
// and degenerate outlier sets; `shifted_digits` supplies a proxy corpus that
// is digit-like but geometrically shifted away from the canonical rendering
// distribution.
LabeledDataset make_synthetic_corpus(SyntheticKind kind, int count, Shape shape, const RngHandle& rng);

enum class GlyphSet {
    digits,   // 0-9
    letters,  // A E F H K L T U Y Z
};

// Stroke-rendered glyph corpus with per-sample affine jitter, the
// self-contained stand-in for byte-image digit benchmarks. 10 classes,
// grayscale, deterministic given rng.
LabeledDataset render_glyph_dataset(GlyphSet set, int count, Shape shape, const RngHandle& rng);

SyntheticKind parse_synthetic_kind(const std::string& name);
GlyphSet parse_glyph_set(const std::string& name);

}  // namespace same
