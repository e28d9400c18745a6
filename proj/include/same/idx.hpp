#pragma once

#include <string>

#include "same/tensor.hpp"

namespace same {

// IDX binary import (the MNIST container format).
//
// Layout, all integers 32-bit big-endian:
//   images: magic 0x00000803, count, rows, cols, then count*rows*cols bytes
//   labels: magic 0x00000801, count, then count bytes
//
// Pixel bytes are scaled from [0,255] to [0,1]. The two files must agree
// on the sample count.
LabeledDataset load_idx_dataset(const std::string& images_path, const std::string& labels_path);

// Writes the dataset back out as an IDX pair, quantizing pixels to bytes
// with round-to-nearest. Used by tooling and tests.
void write_idx_dataset(const LabeledDataset& d, const std::string& images_path, const std::string& labels_path);

}  // namespace same
