// idx.hpp - reader/writer for the IDX binary format used by MNIST.
//
// Image files: big-endian magic 0x00000803, count, rows, cols, then raw u8
// pixels. Label files: magic 0x00000801, count, raw u8 labels.

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace ccep::data {

struct IdxError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IdxImages {
  int count = 0;
  int rows = 0;
  int cols = 0;
  std::vector<std::uint8_t> pixels;  // count*rows*cols, row-major
};

IdxImages read_idx_images(const std::string& path);
std::vector<std::uint8_t> read_idx_labels(const std::string& path);

void write_idx_images(const std::string& path, const IdxImages& images);
void write_idx_labels(const std::string& path, const std::vector<std::uint8_t>& labels);

}  // namespace ccep::data
