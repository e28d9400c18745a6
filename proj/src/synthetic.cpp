#include "same/synthetic.hpp"

#include <algorithm>
#include <cmath>

#include "same/common.hpp"

namespace same {

namespace {

struct Pt {
    double x, y;
};

using Stroke = std::vector<Pt>;

// Glyph skeletons in a unit design box, y growing downward.
std::vector<Stroke> ellipse(double cx, double cy, double rx, double ry, int n = 12) {
    Stroke s;
    for (int i = 0; i <= n; ++i) {
        double a = 2.0 * M_PI * i / n;
        s.push_back({cx + rx * std::sin(a), cy - ry * std::cos(a)});
    }
    return {s};
}

std::vector<Stroke> digit_strokes(int d) {
    switch (d) {
        case 0:
            return ellipse(0.5, 0.5, 0.21, 0.33);
        case 1:
            return {{{0.36, 0.3}, {0.52, 0.15}, {0.52, 0.85}}};
        case 2:
            return {{{0.3, 0.3}, {0.36, 0.17}, {0.52, 0.14}, {0.67, 0.21}, {0.69, 0.35}, {0.58, 0.52}, {0.4, 0.68}, {0.3, 0.84}},
                    {{0.3, 0.84}, {0.71, 0.84}}};
        case 3:
            return {{{0.31, 0.19}, {0.55, 0.14}, {0.68, 0.26}, {0.62, 0.41}, {0.47, 0.49}},
                    {{0.47, 0.49}, {0.66, 0.55}, {0.7, 0.71}, {0.55, 0.85}, {0.31, 0.8}}};
        case 4:
            return {{{0.6, 0.15}, {0.3, 0.62}}, {{0.3, 0.62}, {0.75, 0.62}}, {{0.6, 0.32}, {0.6, 0.86}}};
        case 5:
            return {{{0.68, 0.15}, {0.34, 0.15}, {0.31, 0.45}},
                    {{0.31, 0.45}, {0.55, 0.41}, {0.69, 0.55}, {0.66, 0.74}, {0.5, 0.86}, {0.31, 0.79}}};
        case 6:
            return {{{0.62, 0.14}, {0.44, 0.3}, {0.33, 0.5}, {0.32, 0.7}, {0.45, 0.86}, {0.62, 0.8}, {0.68, 0.63},
                     {0.56, 0.52}, {0.36, 0.58}}};
        case 7:
            return {{{0.29, 0.16}, {0.72, 0.16}, {0.45, 0.85}}};
        case 8: {
            auto top = ellipse(0.5, 0.3, 0.15, 0.155, 10);
            auto bot = ellipse(0.5, 0.66, 0.19, 0.195, 10);
            top.push_back(bot[0]);
            return top;
        }
        case 9:
            return {ellipse(0.48, 0.33, 0.17, 0.18, 10)[0], {{0.65, 0.38}, {0.6, 0.85}}};
        default:
            throw ValueError("digit_strokes: class out of range");
    }
}

std::vector<Stroke> letter_strokes(int c) {
    switch (c) {
        case 0:  // A
            return {{{0.3, 0.85}, {0.5, 0.15}, {0.7, 0.85}}, {{0.38, 0.6}, {0.62, 0.6}}};
        case 1:  // E
            return {{{0.34, 0.15}, {0.34, 0.85}}, {{0.34, 0.15}, {0.68, 0.15}}, {{0.34, 0.5}, {0.6, 0.5}},
                    {{0.34, 0.85}, {0.68, 0.85}}};
        case 2:  // F
            return {{{0.34, 0.15}, {0.34, 0.85}}, {{0.34, 0.15}, {0.68, 0.15}}, {{0.34, 0.5}, {0.6, 0.5}}};
        case 3:  // H
            return {{{0.32, 0.15}, {0.32, 0.85}}, {{0.68, 0.15}, {0.68, 0.85}}, {{0.32, 0.5}, {0.68, 0.5}}};
        case 4:  // K
            return {{{0.33, 0.15}, {0.33, 0.85}}, {{0.67, 0.15}, {0.33, 0.52}}, {{0.44, 0.44}, {0.69, 0.85}}};
        case 5:  // L
            return {{{0.35, 0.15}, {0.35, 0.85}}, {{0.35, 0.85}, {0.68, 0.85}}};
        case 6:  // T
            return {{{0.28, 0.15}, {0.72, 0.15}}, {{0.5, 0.15}, {0.5, 0.85}}};
        case 7:  // U
            return {{{0.31, 0.15}, {0.31, 0.68}, {0.4, 0.84}, {0.6, 0.84}, {0.69, 0.68}, {0.69, 0.15}}};
        case 8:  // Y
            return {{{0.3, 0.15}, {0.5, 0.46}}, {{0.7, 0.15}, {0.5, 0.46}}, {{0.5, 0.46}, {0.5, 0.85}}};
        case 9:  // Z
            return {{{0.3, 0.15}, {0.7, 0.15}}, {{0.7, 0.15}, {0.3, 0.85}}, {{0.3, 0.85}, {0.7, 0.85}}};
        default:
            throw ValueError("letter_strokes: class out of range");
    }
}

struct JitterProfile {
    double rot;           // radians, +-
    double scale_lo, scale_hi;
    double translate;     // design units, +-
    double shear;         // +-
    double point_wobble;  // per-vertex offset, +-
    double stroke_lo, stroke_hi;  // stroke radius, design units
    double fg_lo, fg_hi;          // foreground intensity
    double noise_sigma;
};

constexpr JitterProfile kCanonical{0.30, 0.70, 1.25, 0.13, 0.25, 0.055, 0.035, 0.085, 0.55, 1.00, 0.035};
constexpr JitterProfile kShifted{0.60, 0.50, 1.40, 0.20, 0.38, 0.070, 0.028, 0.105, 0.40, 1.00, 0.055};

double uniform_in(std::mt19937_64& g, double lo, double hi) { return lo + (hi - lo) * uniform01(g); }

double dist_to_segment(double px, double py, const Pt& a, const Pt& b) {
    double vx = b.x - a.x, vy = b.y - a.y;
    double wx = px - a.x, wy = py - a.y;
    double vv = vx * vx + vy * vy;
    double t = vv > 0.0 ? std::clamp((wx * vx + wy * vy) / vv, 0.0, 1.0) : 0.0;
    double dx = wx - t * vx, dy = wy - t * vy;
    return std::sqrt(dx * dx + dy * dy);
}

ImageTensor render_glyph(const std::vector<Stroke>& skeleton, Shape shape, const JitterProfile& jp,
                         std::mt19937_64& g) {
    const double rot = uniform_in(g, -jp.rot, jp.rot);
    const double scale = uniform_in(g, jp.scale_lo, jp.scale_hi);
    const double tx = uniform_in(g, -jp.translate, jp.translate);
    const double ty = uniform_in(g, -jp.translate, jp.translate);
    const double shear = uniform_in(g, -jp.shear, jp.shear);
    double stroke_r = uniform_in(g, jp.stroke_lo, jp.stroke_hi) * shape.width;
    const double fg = uniform_in(g, jp.fg_lo, jp.fg_hi);
    double noise_sigma = jp.noise_sigma;

    // Degradations keep the corpus from being trivially separable: a slice
    // of every class is thin, noisy, occluded, or crossed by a stray stroke.
    const std::uint64_t degrade = uniform_below(g, 100);
    const bool band_erase = degrade < 12;
    const bool thin_noisy = degrade >= 12 && degrade < 24;
    const bool stray_stroke = degrade >= 24 && degrade < 34;
    if (thin_noisy) {
        stroke_r = uniform_in(g, 0.022, 0.032) * shape.width;
        noise_sigma = std::max(noise_sigma, 0.075);
    }
    int band_lo = 0, band_hi = 0;
    bool band_vertical = false;
    if (band_erase) {
        band_vertical = uniform_below(g, 2) == 0;
        int extent = band_vertical ? shape.width : shape.height;
        int width = 3 + static_cast<int>(uniform_below(g, 5));
        band_lo = 4 + static_cast<int>(uniform_below(g, std::max(1, extent - width - 8)));
        band_hi = band_lo + width;
    }

    const double cr = std::cos(rot), sr = std::sin(rot);
    auto transform = [&](Pt p) {
        double x = p.x - 0.5, y = p.y - 0.5;
        x += shear * y;
        double xr = scale * (cr * x - sr * y);
        double yr = scale * (sr * x + cr * y);
        return Pt{(xr + 0.5 + tx) * shape.width, (yr + 0.5 + ty) * shape.height};
    };

    std::vector<std::pair<Pt, Pt>> segments;
    for (const auto& stroke : skeleton) {
        std::vector<Pt> pts;
        pts.reserve(stroke.size());
        for (const Pt& p : stroke) {
            Pt q{p.x + uniform_in(g, -jp.point_wobble, jp.point_wobble),
                 p.y + uniform_in(g, -jp.point_wobble, jp.point_wobble)};
            pts.push_back(transform(q));
        }
        for (std::size_t i = 0; i + 1 < pts.size(); ++i) segments.emplace_back(pts[i], pts[i + 1]);
    }
    if (stray_stroke) {
        Pt a{uniform_in(g, 0.15, 0.85) * shape.width, uniform_in(g, 0.15, 0.85) * shape.height};
        Pt b{uniform_in(g, 0.15, 0.85) * shape.width, uniform_in(g, 0.15, 0.85) * shape.height};
        segments.emplace_back(a, b);
    }

    const double soft = 0.9;  // antialiasing band, pixels
    ImageTensor img(shape);
    for (int y = 0; y < shape.height; ++y) {
        for (int x = 0; x < shape.width; ++x) {
            if (band_erase) {
                int coord = band_vertical ? x : y;
                if (coord >= band_lo && coord < band_hi) {
                    double v = std::clamp(noise_sigma * normal(g), 0.0, 1.0);
                    for (int c = 0; c < shape.channels; ++c) img.at(c, y, x) = static_cast<float>(v);
                    continue;
                }
            }
            double px = x + 0.5, py = y + 0.5;
            double dmin = 1e9;
            for (const auto& [a, b] : segments) dmin = std::min(dmin, dist_to_segment(px, py, a, b));
            double cover = std::clamp((stroke_r + soft * 0.5 - dmin) / soft, 0.0, 1.0);
            double v = fg * cover + noise_sigma * normal(g);
            float pixel = static_cast<float>(std::clamp(v, 0.0, 1.0));
            for (int c = 0; c < shape.channels; ++c) img.at(c, y, x) = pixel;
        }
    }
    return img;
}

LabeledDataset render_glyphs(GlyphSet set, int count, Shape shape, const RngHandle& rng,
                             const JitterProfile& jp, const std::string& name) {
    if (count <= 0) throw ValueError("glyph dataset: count must be positive");
    if (shape.height < 8 || shape.width < 8 || shape.channels < 1) {
        throw ValueError("glyph dataset: shape too small");
    }
    LabeledDataset out;
    out.name = name;
    out.num_classes = 10;
    out.samples.reserve(count);
    out.labels.reserve(count);
    auto g = rng.engine();
    for (int i = 0; i < count; ++i) {
        int cls = static_cast<int>(uniform_below(g, 10));
        auto skeleton = set == GlyphSet::digits ? digit_strokes(cls) : letter_strokes(cls);
        out.samples.push_back(render_glyph(skeleton, shape, jp, g));
        out.labels.push_back(cls);
    }
    return out;
}

}  // namespace

LabeledDataset make_synthetic_corpus(SyntheticKind kind, int count, Shape shape, const RngHandle& rng) {
    if (count <= 0) throw ValueError("make_synthetic_corpus: count must be positive");
    switch (kind) {
        case SyntheticKind::noise: {
            LabeledDataset out;
            out.name = "synthetic/noise";
            out.num_classes = 1;
            out.samples.reserve(count);
            out.labels.assign(count, 0);
            auto g = rng.engine();
            for (int i = 0; i < count; ++i) {
                ImageTensor t(shape);
                for (float& v : t.pixels) v = uniform01f(g);
                out.samples.push_back(std::move(t));
            }
            return out;
        }
        case SyntheticKind::shifted_digits:
            return render_glyphs(GlyphSet::digits, count, shape, rng, kShifted, "synthetic/shifted-digits");
    }
    throw ValueError("make_synthetic_corpus: unsupported kind");
}

LabeledDataset render_glyph_dataset(GlyphSet set, int count, Shape shape, const RngHandle& rng) {
    return render_glyphs(set, count, shape, rng, kCanonical,
                         set == GlyphSet::digits ? "glyphs/digits" : "glyphs/letters");
}

SyntheticKind parse_synthetic_kind(const std::string& name) {
    if (name == "noise") return SyntheticKind::noise;
    if (name == "shifted-digits") return SyntheticKind::shifted_digits;
    throw ValueError("unknown synthetic corpus kind: " + name);
}

GlyphSet parse_glyph_set(const std::string& name) {
    if (name == "digits") return GlyphSet::digits;
    if (name == "letters") return GlyphSet::letters;
    throw ValueError("unknown glyph set: " + name);
}

}  // namespace same
