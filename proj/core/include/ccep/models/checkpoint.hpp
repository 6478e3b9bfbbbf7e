#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ccep/tensor.hpp"

namespace ccep::models {

// Self-describing binary container for trained state: named parameter tensors
// plus whatever counters/scalars the producer needs (optimizer moments travel
// as ordinary tensors under "opt." names). Round-trips bit-exactly.
struct Checkpoint {
  std::string arch_id;
  std::uint64_t config_hash = 0;
  std::int64_t epoch = 0;
  std::vector<std::pair<std::string, std::uint64_t>> counters;
  std::vector<std::pair<std::string, double>> scalars;
  std::vector<std::pair<std::string, Tensor>> tensors;

  void put_counter(const std::string& name, std::uint64_t value);
  void put_scalar(const std::string& name, double value);
  void put_tensor(const std::string& name, Tensor t);

  std::uint64_t counter(const std::string& name) const;  // throws when absent
  double scalar(const std::string& name) const;
  const Tensor& tensor(const std::string& name) const;
  const Tensor* find_tensor(const std::string& name) const;
  bool has_counter(const std::string& name) const;
};

struct CheckpointError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void write_checkpoint(const std::string& path, const Checkpoint& ck);
Checkpoint read_checkpoint(const std::string& path);

}  // namespace ccep::models
