#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "same/rng.hpp"

namespace same {

struct Shape {
    int channels = 0;
    int height = 0;
    int width = 0;

    int pixel_count() const { return channels * height * width; }
    bool operator==(const Shape&) const = default;
    std::string str() const;
};

// A single normalized image. Pixels are row-major (c, h, w), values in [0,1].
struct ImageTensor {
    Shape shape;
    std::vector<float> pixels;

    ImageTensor() = default;
    ImageTensor(Shape s, float fill = 0.0f) : shape(s), pixels(static_cast<std::size_t>(s.pixel_count()), fill) {}

    float& at(int c, int y, int x) { return pixels[(static_cast<std::size_t>(c) * shape.height + y) * shape.width + x]; }
    float at(int c, int y, int x) const { return pixels[(static_cast<std::size_t>(c) * shape.height + y) * shape.width + x]; }

    // Throws ShapeError / ValueError on size mismatch or out-of-range values.
    void validate() const;

    // Deterministic fingerprint of the raw pixel bytes.
    std::uint64_t content_key() const;
};

struct LabeledDataset {
    std::string name;
    int num_classes = 0;
    std::vector<ImageTensor> samples;
    std::vector<int> labels;

    std::size_t size() const { return samples.size(); }
    bool empty() const { return samples.empty(); }
    Shape shape() const { return samples.empty() ? Shape{} : samples.front().shape; }

    void validate() const;

    // SHA-256 over name, class count, labels, and pixel payload; identifies
    // the exact dataset content in training manifests.
    std::string fingerprint() const;

    LabeledDataset subset(const std::vector<std::size_t>& indices, const std::string& new_name) const;
};

// Deterministic shuffle-then-partition. Fractions must be positive and sum
// to 1 within 1e-9; each part must receive at least one sample.
std::vector<LabeledDataset> split_dataset(const LabeledDataset& d, const std::vector<double>& fractions,
                                          const RngHandle& rng);

}  // namespace same
