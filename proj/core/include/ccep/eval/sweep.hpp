#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ccep/config.hpp"
#include "ccep/data/dataset.hpp"
#include "ccep/training/train.hpp"

namespace ccep::eval {

struct SweepCell {
  std::string method;  // stable id, e.g. "cce", "cce_plus_k100", "alpha0_k200"
  std::string label;   // display name for the result table row
  int bag_size = 0;
  int k = 0;           // 0 when no clustering is involved
  double alpha = 1.0;
  std::uint64_t seed = 0;
  bool ok = false;
  double accuracy = 0.0;
  std::string error;
  std::vector<training::EpochLog> history;
};

struct SweepResult {
  std::vector<SweepCell> cells;
  std::vector<std::string> row_order;  // method ids in table order
  std::vector<int> bag_sizes;          // table columns
  bool all_ok = true;
};

using CellCallback = std::function<void(const SweepCell&)>;

// Full accuracy grid: shares one VAE fit and one set of centroids per K
// across cells; every cell regenerates its own bags, votes its own
// cluster-class labels, and trains its own classifier from a seed derived
// from the master seed and the cell coordinates. Cell failures are recorded
// in place of aborting the grid.
SweepResult run_table2_sweep(const ExperimentConfig& cfg, const data::Dataset& pool,
                             const data::Dataset& test_set, const std::string& out_dir,
                             const CellCallback& on_cell = {});

// Accuracy matrix, one row per method and one column per bag size;
// "-" marks cells outside the grid, "FAILED" marks cell errors.
void write_sweep_csv(const std::string& path, const SweepResult& result);

// Per-cell provenance (seed, epochs, status, accuracy, wall-clock timestamp).
void write_sweep_sidecar(const std::string& path, const SweepResult& result,
                         const ExperimentConfig& cfg);

}  // namespace ccep::eval
