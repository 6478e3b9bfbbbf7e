#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ccep/clustering/kmeans.hpp"
#include "ccep/data/bags.hpp"
#include "ccep/data/dataset.hpp"
#include "ccep/models/checkpoint.hpp"
#include "ccep/models/cnn.hpp"
#include "ccep/models/vae.hpp"
#include "ccep/training/optim.hpp"

namespace ccep::training {

struct ConfigurationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TrainRunSpec {
  int epochs = 25;
  int batch_size = 128;
  std::uint64_t seed = 1;
  models::LossSpec loss;               // classifier only
  int checkpoint_every = 0;            // epochs between rolling checkpoints; 0 = final only
  double clip_norm = 5.0;              // global gradient norm ceiling
  double learning_rate = 0.001;
  double decay_rate = 0.95;            // per-epoch decay for the SGD schedule
  OptimizerKind optimizer = OptimizerKind::SgdExpDecay;
  int jobs = 1;
  std::string checkpoint_path;         // empty = keep everything in memory
  std::string resume_from;             // checkpoint to continue from (params,
                                       // optimizer moments and step_count)
  std::uint64_t config_hash = 0;       // stamped into checkpoints
};

struct EpochLog {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double cce_component = 0.0;      // VAE: reconstruction term
  double cluster_component = 0.0;  // VAE: KL term
  double test_accuracy = 0.0;      // NaN when no held-out set participates
  double lr_eff = 0.0;
  double wall_seconds = 0.0;
};

std::string epoch_log_header();
std::string format_epoch_log(const EpochLog& log);

using EpochCallback = std::function<void(const EpochLog&)>;

struct TrainResult {
  std::vector<EpochLog> history;
  int completed_epochs = 0;
  bool diverged = false;           // non-finite loss; params rolled back
  double final_test_accuracy = 0.0;
};

// Unsupervised pass over the instance pool: global reshuffle each epoch,
// Adam by default, ELBO objective. On a non-finite loss the model is rolled
// back to the end of the last finite epoch and the run stops early.
TrainResult train_vae(models::VaeModel& model, const data::Dataset& pool,
                      const TrainRunSpec& spec, const EpochCallback& on_epoch = {});

// Weakly supervised classifier pass. Each epoch reshuffles bag order and the
// instances inside every bag, then concatenates the bags into one stream and
// cuts fixed-size batches from it, so large bags dominate whole batches.
// Weak labels come from the owning bag; cluster-class labels come from the
// precomputed cache and are required for the mixed loss.
struct ClassifierData {
  const data::Dataset* pool = nullptr;              // training instances
  const std::vector<data::Bag>* bags = nullptr;     // reference pool ids
  const data::Dataset* test_set = nullptr;          // optional held-out set
  const std::vector<clustering::YhatEntry>* yhat_cache = nullptr;  // optional
};

TrainResult train_classifier(models::CnnModel& model, const ClassifierData& data,
                             const TrainRunSpec& spec, const EpochCallback& on_epoch = {});

// Held-out accuracy of the classifier in eval mode.
double evaluate_accuracy(const models::CnnModel& model, const data::Dataset& test_set,
                         int batch_size = 256);

// Checkpoint plumbing. Parameter tensors are stored under their block names,
// Adam moments under "opt.m."/"opt.v." prefixes.
models::Checkpoint snapshot_vae(const models::VaeModel& model, const OptimizerState& opt,
                                std::int64_t epoch, std::uint64_t config_hash);
models::Checkpoint snapshot_cnn(const models::CnnModel& model, const OptimizerState& opt,
                                std::int64_t epoch, std::uint64_t config_hash);
void restore_vae(models::VaeModel& model, const models::Checkpoint& ck);
void restore_cnn(models::CnnModel& model, const models::Checkpoint& ck);

}  // namespace ccep::training
