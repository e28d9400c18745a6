#include "same/idx.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>

#include "same/common.hpp"

namespace same {

namespace {

constexpr std::uint32_t kImagesMagic = 0x00000803;
constexpr std::uint32_t kLabelsMagic = 0x00000801;

std::uint32_t read_be_u32(std::istream& in, const std::string& path) {
    std::uint8_t b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw IoError("idx: truncated header in " + path);
    return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) | (std::uint32_t(b[2]) << 8) |
           std::uint32_t(b[3]);
}

void write_be_u32(std::ostream& out, std::uint32_t v) {
    std::uint8_t b[4] = {static_cast<std::uint8_t>(v >> 24), static_cast<std::uint8_t>(v >> 16),
                         static_cast<std::uint8_t>(v >> 8), static_cast<std::uint8_t>(v)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

}  // namespace

LabeledDataset load_idx_dataset(const std::string& images_path, const std::string& labels_path) {
    std::ifstream img(images_path, std::ios::binary);
    if (!img) throw IoError("idx: cannot open " + images_path);
    std::ifstream lab(labels_path, std::ios::binary);
    if (!lab) throw IoError("idx: cannot open " + labels_path);

    std::uint32_t img_magic = read_be_u32(img, images_path);
    if (img_magic != kImagesMagic) throw FormatError("idx: bad image magic in " + images_path);
    std::uint32_t count = read_be_u32(img, images_path);
    std::uint32_t rows = read_be_u32(img, images_path);
    std::uint32_t cols = read_be_u32(img, images_path);
    if (rows == 0 || cols == 0) throw FormatError("idx: zero image dimension in " + images_path);

    std::uint32_t lab_magic = read_be_u32(lab, labels_path);
    if (lab_magic != kLabelsMagic) throw FormatError("idx: bad label magic in " + labels_path);
    std::uint32_t lab_count = read_be_u32(lab, labels_path);
    if (lab_count != count) {
        throw ConsistencyError("idx: image count " + std::to_string(count) + " != label count " +
                               std::to_string(lab_count));
    }

    LabeledDataset out;
    out.name = images_path;
    Shape shape{1, static_cast<int>(rows), static_cast<int>(cols)};
    out.samples.reserve(count);
    out.labels.reserve(count);

    std::vector<std::uint8_t> buf(static_cast<std::size_t>(rows) * cols);
    int max_label = 0;
    for (std::uint32_t i = 0; i < count; ++i) {
        img.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
        if (!img) throw IoError("idx: truncated image data in " + images_path);
        ImageTensor t(shape);
        for (std::size_t p = 0; p < buf.size(); ++p) {
            t.pixels[p] = static_cast<float>(buf[p]) / 255.0f;
        }
        out.samples.push_back(std::move(t));

        char lb;
        lab.read(&lb, 1);
        if (!lab) throw IoError("idx: truncated label data in " + labels_path);
        int y = static_cast<std::uint8_t>(lb);
        max_label = std::max(max_label, y);
        out.labels.push_back(y);
    }
    out.num_classes = max_label + 1;
    return out;
}

void write_idx_dataset(const LabeledDataset& d, const std::string& images_path, const std::string& labels_path) {
    d.validate();
    Shape s = d.shape();
    if (s.channels != 1) throw ValueError("idx: only single-channel datasets can be exported");

    std::ofstream img(images_path, std::ios::binary);
    if (!img) throw IoError("idx: cannot write " + images_path);
    write_be_u32(img, kImagesMagic);
    write_be_u32(img, static_cast<std::uint32_t>(d.size()));
    write_be_u32(img, static_cast<std::uint32_t>(s.height));
    write_be_u32(img, static_cast<std::uint32_t>(s.width));
    for (const auto& t : d.samples) {
        for (float v : t.pixels) {
            auto b = static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
            img.put(static_cast<char>(b));
        }
    }
    if (!img) throw IoError("idx: write failed for " + images_path);

    std::ofstream lab(labels_path, std::ios::binary);
    if (!lab) throw IoError("idx: cannot write " + labels_path);
    write_be_u32(lab, kLabelsMagic);
    write_be_u32(lab, static_cast<std::uint32_t>(d.size()));
    for (int y : d.labels) lab.put(static_cast<char>(static_cast<std::uint8_t>(y)));
    if (!lab) throw IoError("idx: write failed for " + labels_path);
}

}  // namespace same
