#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace ccep {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DatasetConfig {
  std::string source = "synthetic";  // "synthetic" or "idx"
  std::string data_root;             // directory of IDX files for source=idx
  int train_per_class = 1000;        // synthetic generation size
  int test_per_class = 200;
  double noise_sigma = 0.02;
  int num_classes = 10;
  int bag_size = 10;
  int bags_per_class = 0;  // 0 = per-class pool size / bag_size
  double distractor_fraction = 0.5;
  std::uint64_t seed = 0;  // derived from master_seed unless set in the file
};

struct VaeConfig {
  std::string arch = "mnist";
  int epochs = 25;
  int batch_size = 128;
  double learning_rate = 0.001;
  std::string optimizer = "adam";
  int checkpoint_every = 0;
  std::uint64_t seed = 0;
};

struct ClusterConfig {
  int k = 100;
  int max_iters = 300;
  double tol = 1e-4;
  int restarts = 1;
  std::uint64_t seed = 0;
};

struct ClassifierConfig {
  std::string arch = "mnist";
  std::string loss = "cce_plus";  // "cce" or "cce_plus"
  double alpha = 0.5;
  int epochs = 25;
  int batch_size = 128;
  double learning_rate = 0.001;
  double decay_rate = 0.95;
  std::string optimizer = "sgd_exp_decay";
  std::uint64_t seed = 0;
};

struct SweepConfig {
  std::vector<int> bag_sizes = {10, 50, 100, 200, 500};
  std::vector<int> ks = {10, 20, 100};
  bool include_cce = true;
  bool include_alpha_zero = false;
  int alpha_zero_k = 200;
  int alpha_zero_bag_size = 10;
};

struct ExperimentConfig {
  std::string out_dir = "out";
  std::uint64_t master_seed = 1;
  DatasetConfig dataset;
  VaeConfig vae;
  ClusterConfig cluster;
  ClassifierConfig classifier;
  SweepConfig sweep;

  // Sorted key=value dump of every semantic field. Paths (out_dir, data_root)
  // stay out so relocating artifacts does not invalidate them.
  std::string canonical() const;
  std::uint64_t hash() const;
};

// INI-style file: top-level keys, then [dataset] [vae] [cluster] [classifier]
// [sweep] sections of flat key=value pairs. '#' and ';' start comments.
// Unknown keys are errors. Section seeds left unset derive from master_seed;
// a non-null master_override replaces master_seed before that derivation.
ExperimentConfig parse_config_text(const std::string& text, const std::string& origin,
                                   const std::uint64_t* master_override = nullptr);
ExperimentConfig parse_config_file(const std::string& path,
                                   const std::uint64_t* master_override = nullptr);

void validate_config(const ExperimentConfig& cfg);

}  // namespace ccep
