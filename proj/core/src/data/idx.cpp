#include "ccep/data/idx.hpp"

#include <fstream>

namespace ccep::data {

namespace {

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;

std::uint32_t read_be32(std::ifstream& f, const std::string& path, const char* what) {
  std::uint8_t b[4];
  f.read(reinterpret_cast<char*>(b), 4);
  if (!f) throw IdxError(path + ": truncated while reading " + what);
  return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) |
         (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
}

void write_be32(std::ofstream& f, std::uint32_t v) {
  std::uint8_t b[4] = {static_cast<std::uint8_t>(v >> 24), static_cast<std::uint8_t>(v >> 16),
                       static_cast<std::uint8_t>(v >> 8), static_cast<std::uint8_t>(v)};
  f.write(reinterpret_cast<char*>(b), 4);
}

}  // namespace

IdxImages read_idx_images(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IdxError(path + ": cannot open image file");
  std::uint32_t magic = read_be32(f, path, "magic");
  if (magic != kImageMagic) {
    throw IdxError(path + ": bad image magic 0x" + std::to_string(magic) +
                   " (expected 0x00000803)");
  }
  IdxImages out;
  out.count = static_cast<int>(read_be32(f, path, "count"));
  out.rows = static_cast<int>(read_be32(f, path, "rows"));
  out.cols = static_cast<int>(read_be32(f, path, "cols"));
  std::size_t n = std::size_t(out.count) * out.rows * out.cols;
  out.pixels.resize(n);
  f.read(reinterpret_cast<char*>(out.pixels.data()), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(f.gcount()) != n) {
    throw IdxError(path + ": truncated pixel payload (" + std::to_string(f.gcount()) +
                   " of " + std::to_string(n) + " bytes)");
  }
  return out;
}

std::vector<std::uint8_t> read_idx_labels(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IdxError(path + ": cannot open label file");
  std::uint32_t magic = read_be32(f, path, "magic");
  if (magic != kLabelMagic) {
    throw IdxError(path + ": bad label magic 0x" + std::to_string(magic) +
                   " (expected 0x00000801)");
  }
  std::uint32_t count = read_be32(f, path, "count");
  std::vector<std::uint8_t> labels(count);
  f.read(reinterpret_cast<char*>(labels.data()), static_cast<std::streamsize>(count));
  if (static_cast<std::size_t>(f.gcount()) != count) {
    throw IdxError(path + ": truncated label payload");
  }
  return labels;
}

void write_idx_images(const std::string& path, const IdxImages& images) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IdxError(path + ": cannot open for writing");
  write_be32(f, kImageMagic);
  write_be32(f, static_cast<std::uint32_t>(images.count));
  write_be32(f, static_cast<std::uint32_t>(images.rows));
  write_be32(f, static_cast<std::uint32_t>(images.cols));
  f.write(reinterpret_cast<const char*>(images.pixels.data()),
          static_cast<std::streamsize>(images.pixels.size()));
  if (!f) throw IdxError(path + ": short write");
}

void write_idx_labels(const std::string& path, const std::vector<std::uint8_t>& labels) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IdxError(path + ": cannot open for writing");
  write_be32(f, kLabelMagic);
  write_be32(f, static_cast<std::uint32_t>(labels.size()));
  f.write(reinterpret_cast<const char*>(labels.data()),
          static_cast<std::streamsize>(labels.size()));
  if (!f) throw IdxError(path + ": short write");
}

}  // namespace ccep::data
