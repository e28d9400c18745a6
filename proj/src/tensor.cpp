#include "same/tensor.hpp"

#include <cmath>
#include <numeric>

#include "same/common.hpp"
#include "same/sha256.hpp"

namespace same {

std::string Shape::str() const {
    return "(" + std::to_string(channels) + "," + std::to_string(height) + "," + std::to_string(width) + ")";
}

void ImageTensor::validate() const {
    if (static_cast<int>(pixels.size()) != shape.pixel_count()) {
        throw ShapeError("ImageTensor: pixel buffer does not match shape " + shape.str());
    }
    for (float v : pixels) {
        if (!std::isfinite(v)) throw ValueError("ImageTensor: non-finite pixel");
        if (v < 0.0f || v > 1.0f) throw ValueError("ImageTensor: pixel outside [0,1]");
    }
}

std::uint64_t ImageTensor::content_key() const {
    return fnv1a64(pixels.data(), pixels.size() * sizeof(float));
}

void LabeledDataset::validate() const {
    if (samples.size() != labels.size()) {
        throw ConsistencyError("LabeledDataset '" + name + "': sample/label count mismatch");
    }
    if (num_classes <= 0) throw ValueError("LabeledDataset '" + name + "': num_classes must be positive");
    Shape s = shape();
    for (const auto& img : samples) {
        if (!(img.shape == s)) throw ShapeError("LabeledDataset '" + name + "': mixed shapes");
        img.validate();
    }
    for (int y : labels) {
        if (y < 0 || y >= num_classes) throw ValueError("LabeledDataset '" + name + "': label out of range");
    }
}

std::string LabeledDataset::fingerprint() const {
    Sha256 h;
    h.update(name);
    std::int64_t meta[5] = {num_classes, static_cast<std::int64_t>(samples.size()), shape().channels,
                            shape().height, shape().width};
    h.update(meta, sizeof meta);
    for (int y : labels) {
        std::int32_t v = y;
        h.update(&v, sizeof v);
    }
    for (const auto& img : samples) {
        h.update(img.pixels.data(), img.pixels.size() * sizeof(float));
    }
    return to_hex(h.digest());
}

LabeledDataset LabeledDataset::subset(const std::vector<std::size_t>& indices, const std::string& new_name) const {
    LabeledDataset out;
    out.name = new_name;
    out.num_classes = num_classes;
    out.samples.reserve(indices.size());
    out.labels.reserve(indices.size());
    for (std::size_t i : indices) {
        if (i >= samples.size()) throw ValueError("subset: index out of range");
        out.samples.push_back(samples[i]);
        out.labels.push_back(labels[i]);
    }
    return out;
}

std::vector<LabeledDataset> split_dataset(const LabeledDataset& d, const std::vector<double>& fractions,
                                          const RngHandle& rng) {
    if (d.empty()) throw ValueError("split_dataset: empty dataset");
    if (fractions.empty()) throw ValueError("split_dataset: no fractions");
    double sum = 0.0;
    for (double f : fractions) {
        if (f <= 0.0) throw ValueError("split_dataset: fractions must be positive");
        sum += f;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw ValueError("split_dataset: fractions must sum to 1");

    const std::size_t n = d.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto g = rng.engine();
    shuffle_indices(order, g);

    // Cumulative rounding keeps the partition exhaustive.
    std::vector<std::size_t> bounds;
    double acc = 0.0;
    for (std::size_t k = 0; k + 1 < fractions.size(); ++k) {
        acc += fractions[k];
        bounds.push_back(static_cast<std::size_t>(std::llround(acc * static_cast<double>(n))));
    }
    bounds.push_back(n);

    std::vector<LabeledDataset> parts;
    std::size_t start = 0;
    for (std::size_t k = 0; k < fractions.size(); ++k) {
        std::size_t end = bounds[k];
        if (end <= start || end > n) throw ValueError("split_dataset: fraction produces empty split");
        std::vector<std::size_t> idx(order.begin() + start, order.begin() + end);
        parts.push_back(d.subset(idx, d.name + "/split" + std::to_string(k)));
        start = end;
    }
    return parts;
}

}  // namespace same
