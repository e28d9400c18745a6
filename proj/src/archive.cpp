#include "same/archive.hpp"

#include <fstream>

#include <json.hpp>

#include "same/common.hpp"

namespace same {

using nlohmann::json;

static_assert(sizeof(float) == 4, "float32 payload assumes 4-byte float");

void save_dataset_archive(const LabeledDataset& d, const std::string& base_path,
                          const std::string& seed_provenance) {
    d.validate();
    Shape s = d.shape();

    std::ofstream payload(base_path + ".f32", std::ios::binary);
    if (!payload) throw IoError("archive: cannot write " + base_path + ".f32");
    for (const auto& t : d.samples) {
        payload.write(reinterpret_cast<const char*>(t.pixels.data()),
                      static_cast<std::streamsize>(t.pixels.size() * sizeof(float)));
    }
    if (!payload) throw IoError("archive: payload write failed for " + base_path);

    json manifest = {
        {"format", "same-tensor-archive"},
        {"version", 1},
        {"name", d.name},
        {"dtype", "float32-le"},
        {"count", d.size()},
        {"shape", {s.channels, s.height, s.width}},
        {"num_classes", d.num_classes},
        {"labels", d.labels},
        {"seed_provenance", seed_provenance},
    };
    std::ofstream mf(base_path + ".json");
    if (!mf) throw IoError("archive: cannot write " + base_path + ".json");
    mf << manifest.dump(2) << "\n";
    if (!mf) throw IoError("archive: manifest write failed for " + base_path);
}

static json read_manifest(const std::string& base_path) {
    std::ifstream mf(base_path + ".json");
    if (!mf) throw IoError("archive: cannot open " + base_path + ".json");
    json manifest;
    try {
        mf >> manifest;
    } catch (const json::exception& e) {
        throw FormatError("archive: bad manifest " + base_path + ".json: " + e.what());
    }
    if (manifest.value("format", "") != "same-tensor-archive") {
        throw FormatError("archive: " + base_path + ".json is not a tensor archive manifest");
    }
    return manifest;
}

LabeledDataset load_dataset_archive(const std::string& base_path) {
    json manifest = read_manifest(base_path);
    if (manifest.value("dtype", "") != "float32-le") {
        throw FormatError("archive: unsupported dtype in " + base_path);
    }

    LabeledDataset out;
    out.name = manifest.value("name", base_path);
    out.num_classes = manifest.value("num_classes", 0);
    auto shape_arr = manifest.at("shape");
    Shape s{shape_arr.at(0).get<int>(), shape_arr.at(1).get<int>(), shape_arr.at(2).get<int>()};
    const auto count = manifest.at("count").get<std::size_t>();
    out.labels = manifest.at("labels").get<std::vector<int>>();
    if (out.labels.size() != count) {
        throw ConsistencyError("archive: label count mismatch in " + base_path);
    }

    std::ifstream payload(base_path + ".f32", std::ios::binary);
    if (!payload) throw IoError("archive: cannot open " + base_path + ".f32");
    out.samples.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        ImageTensor t(s);
        payload.read(reinterpret_cast<char*>(t.pixels.data()),
                     static_cast<std::streamsize>(t.pixels.size() * sizeof(float)));
        if (!payload) throw IoError("archive: truncated payload " + base_path + ".f32");
        out.samples.push_back(std::move(t));
    }
    out.validate();
    return out;
}

std::string archive_provenance(const std::string& base_path) {
    return read_manifest(base_path).value("seed_provenance", "");
}

}  // namespace same
