#pragma once

#include <string>

#include "same/tensor.hpp"

namespace same {

// Internal tensor archive: <base>.json manifest next to a flat
// little-endian float32 payload <base>.f32. The manifest records name,
// shape, dtype, count, labels, and the seed provenance string supplied
// by whoever produced the data.
void save_dataset_archive(const LabeledDataset& d, const std::string& base_path,
                          const std::string& seed_provenance);

LabeledDataset load_dataset_archive(const std::string& base_path);

// Provenance string recorded in a stored archive, "" when absent.
std::string archive_provenance(const std::string& base_path);

}  // namespace same
