#include "ccep/models/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace ccep::models {

namespace {

constexpr char kMagic[8] = {'C', 'C', 'E', 'P', 'C', 'K', 'P', '1'};

void wr_bytes(std::ostream& out, const void* p, std::size_t n) {
  out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

template <typename T>
void wr_pod(std::ostream& out, T x) {
  wr_bytes(out, &x, sizeof(T));
}

void wr_string(std::ostream& out, const std::string& s) {
  wr_pod<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  wr_bytes(out, s.data(), s.size());
}

void rd_bytes(std::istream& in, void* p, std::size_t n, const std::string& path) {
  in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n) {
    throw CheckpointError("truncated checkpoint: " + path);
  }
}

template <typename T>
T rd_pod(std::istream& in, const std::string& path) {
  T x;
  rd_bytes(in, &x, sizeof(T), path);
  return x;
}

std::string rd_string(std::istream& in, const std::string& path) {
  const auto n = rd_pod<std::uint32_t>(in, path);
  if (n > (1u << 20)) throw CheckpointError("implausible string length in " + path);
  std::string s(n, '\0');
  if (n) rd_bytes(in, s.data(), n, path);
  return s;
}

}  // namespace

void Checkpoint::put_counter(const std::string& name, std::uint64_t value) {
  counters.emplace_back(name, value);
}
void Checkpoint::put_scalar(const std::string& name, double value) {
  scalars.emplace_back(name, value);
}
void Checkpoint::put_tensor(const std::string& name, Tensor t) {
  tensors.emplace_back(name, std::move(t));
}

std::uint64_t Checkpoint::counter(const std::string& name) const {
  for (const auto& [k, v] : counters) {
    if (k == name) return v;
  }
  throw CheckpointError("checkpoint has no counter '" + name + "'");
}

double Checkpoint::scalar(const std::string& name) const {
  for (const auto& [k, v] : scalars) {
    if (k == name) return v;
  }
  throw CheckpointError("checkpoint has no scalar '" + name + "'");
}

const Tensor& Checkpoint::tensor(const std::string& name) const {
  if (const Tensor* t = find_tensor(name)) return *t;
  throw CheckpointError("checkpoint has no tensor '" + name + "'");
}

const Tensor* Checkpoint::find_tensor(const std::string& name) const {
  for (const auto& [k, v] : tensors) {
    if (k == name) return &v;
  }
  return nullptr;
}

bool Checkpoint::has_counter(const std::string& name) const {
  for (const auto& [k, v] : counters) {
    if (k == name) return true;
  }
  return false;
}

void write_checkpoint(const std::string& path, const Checkpoint& ck) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("cannot open " + path + " for writing");
  wr_bytes(out, kMagic, sizeof(kMagic));
  wr_string(out, ck.arch_id);
  wr_pod<std::uint64_t>(out, ck.config_hash);
  wr_pod<std::int64_t>(out, ck.epoch);

  wr_pod<std::uint32_t>(out, static_cast<std::uint32_t>(ck.counters.size()));
  for (const auto& [name, value] : ck.counters) {
    wr_string(out, name);
    wr_pod<std::uint64_t>(out, value);
  }
  wr_pod<std::uint32_t>(out, static_cast<std::uint32_t>(ck.scalars.size()));
  for (const auto& [name, value] : ck.scalars) {
    wr_string(out, name);
    wr_pod<double>(out, value);
  }
  wr_pod<std::uint32_t>(out, static_cast<std::uint32_t>(ck.tensors.size()));
  for (const auto& [name, t] : ck.tensors) {
    wr_string(out, name);
    wr_pod<std::uint32_t>(out, static_cast<std::uint32_t>(t.shape.size()));
    for (int d : t.shape) wr_pod<std::int32_t>(out, d);
    wr_bytes(out, t.v.data(), t.v.size() * sizeof(double));
  }
  if (!out) throw CheckpointError("failed writing " + path);
}

Checkpoint read_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open " + path);
  char magic[8];
  rd_bytes(in, magic, sizeof(magic), path);
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw CheckpointError("bad magic in " + path);
  }

  Checkpoint ck;
  ck.arch_id = rd_string(in, path);
  ck.config_hash = rd_pod<std::uint64_t>(in, path);
  ck.epoch = rd_pod<std::int64_t>(in, path);

  const auto nc = rd_pod<std::uint32_t>(in, path);
  for (std::uint32_t i = 0; i < nc; ++i) {
    std::string name = rd_string(in, path);
    const auto value = rd_pod<std::uint64_t>(in, path);
    ck.counters.emplace_back(std::move(name), value);
  }
  const auto ns = rd_pod<std::uint32_t>(in, path);
  for (std::uint32_t i = 0; i < ns; ++i) {
    std::string name = rd_string(in, path);
    const auto value = rd_pod<double>(in, path);
    ck.scalars.emplace_back(std::move(name), value);
  }
  const auto nt = rd_pod<std::uint32_t>(in, path);
  for (std::uint32_t i = 0; i < nt; ++i) {
    std::string name = rd_string(in, path);
    const auto rank = rd_pod<std::uint32_t>(in, path);
    if (rank > 8) throw CheckpointError("implausible tensor rank in " + path);
    std::vector<int> shape(rank);
    for (auto& d : shape) {
      d = rd_pod<std::int32_t>(in, path);
      if (d < 0) throw CheckpointError("negative tensor dimension in " + path);
    }
    Tensor t(shape);
    rd_bytes(in, t.v.data(), t.v.size() * sizeof(double), path);
    ck.tensors.emplace_back(std::move(name), std::move(t));
  }
  return ck;
}

}  // namespace ccep::models
