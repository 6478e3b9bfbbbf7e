#include "ccep/training/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

namespace ccep::training {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void validate_spec(const TrainRunSpec& spec, const char* where) {
  if (spec.epochs < 1) {
    throw std::invalid_argument(std::string(where) + ": epochs must be >= 1");
  }
  if (spec.batch_size < 1) {
    throw std::invalid_argument(std::string(where) + ": batch size must be >= 1");
  }
  if (spec.learning_rate <= 0.0) {
    throw std::invalid_argument(std::string(where) + ": learning rate must be positive");
  }
}

OptimizerState make_optimizer(const TrainRunSpec& spec,
                              const std::vector<const models::ParamBlock*>& params,
                              std::int64_t steps_per_epoch) {
  if (spec.optimizer == OptimizerKind::Adam) {
    return OptimizerState::adam(spec.learning_rate, params);
  }
  return OptimizerState::sgd_exp_decay(spec.learning_rate, spec.decay_rate,
                                       std::max<std::int64_t>(1, steps_per_epoch));
}

std::vector<Tensor> save_params(const std::vector<models::ParamBlock*>& params) {
  std::vector<Tensor> out;
  out.reserve(params.size());
  for (const auto* p : params) out.push_back(p->w);
  return out;
}

void load_params(const std::vector<models::ParamBlock*>& params, const std::vector<Tensor>& src) {
  for (std::size_t i = 0; i < params.size(); ++i) params[i]->w = src[i];
}

void store_optimizer(models::Checkpoint& ck, const OptimizerState& opt,
                     const std::vector<const models::ParamBlock*>& params) {
  ck.put_counter("opt.kind", opt.kind == OptimizerKind::Adam ? 0u : 1u);
  ck.put_counter("opt.step_count", static_cast<std::uint64_t>(opt.step_count));
  ck.put_counter("opt.decay_steps", static_cast<std::uint64_t>(opt.decay_steps));
  ck.put_scalar("opt.learning_rate", opt.learning_rate);
  ck.put_scalar("opt.decay_rate", opt.decay_rate);
  if (opt.kind == OptimizerKind::Adam) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      ck.put_tensor("opt.m." + params[i]->name, opt.m[i]);
      ck.put_tensor("opt.v." + params[i]->name, opt.v[i]);
    }
  }
}

void restore_optimizer(OptimizerState& opt, const models::Checkpoint& ck,
                       const std::vector<const models::ParamBlock*>& params) {
  const auto kind =
      ck.counter("opt.kind") == 0 ? OptimizerKind::Adam : OptimizerKind::SgdExpDecay;
  if (kind != opt.kind) {
    throw models::CheckpointError("checkpoint optimizer kind differs from run configuration");
  }
  opt.step_count = static_cast<std::int64_t>(ck.counter("opt.step_count"));
  opt.decay_steps = static_cast<std::int64_t>(ck.counter("opt.decay_steps"));
  opt.learning_rate = ck.scalar("opt.learning_rate");
  opt.decay_rate = ck.scalar("opt.decay_rate");
  if (opt.kind == OptimizerKind::Adam) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      opt.m[i] = ck.tensor("opt.m." + params[i]->name);
      opt.v[i] = ck.tensor("opt.v." + params[i]->name);
    }
  }
}

void restore_params_from(const models::Checkpoint& ck,
                         const std::vector<models::ParamBlock*>& params,
                         const std::string& expected_arch) {
  if (ck.arch_id != expected_arch) {
    throw models::CheckpointError("checkpoint holds '" + ck.arch_id + "', expected '" +
                                  expected_arch + "'");
  }
  for (auto* p : params) {
    const Tensor& t = ck.tensor(p->name);
    if (!same_shape(t.shape, p->w.shape)) {
      throw models::CheckpointError("checkpoint tensor '" + p->name + "' has shape " +
                                    shape_str(t.shape) + ", model expects " +
                                    shape_str(p->w.shape));
    }
    p->w = t;
  }
}

}  // namespace

std::string epoch_log_header() {
  return "epoch\ttrain_loss\tcce_component\tcluster_component\ttest_accuracy\tlr_eff\twall_"
         "seconds";
}

std::string format_epoch_log(const EpochLog& log) {
  char buf[256];
  if (std::isnan(log.test_accuracy)) {
    std::snprintf(buf, sizeof(buf), "%d\t%.9g\t%.9g\t%.9g\t-\t%.9g\t%.3f", log.epoch,
                  log.train_loss, log.cce_component, log.cluster_component, log.lr_eff,
                  log.wall_seconds);
  } else {
    std::snprintf(buf, sizeof(buf), "%d\t%.9g\t%.9g\t%.9g\t%.6f\t%.9g\t%.3f", log.epoch,
                  log.train_loss, log.cce_component, log.cluster_component, log.test_accuracy,
                  log.lr_eff, log.wall_seconds);
  }
  return buf;
}

models::Checkpoint snapshot_vae(const models::VaeModel& model, const OptimizerState& opt,
                                std::int64_t epoch, std::uint64_t config_hash) {
  models::Checkpoint ck;
  ck.arch_id = "vae:" + model.arch().name;
  ck.config_hash = config_hash;
  ck.epoch = epoch;
  auto params = model.param_blocks();
  store_optimizer(ck, opt, params);
  for (const auto* p : params) ck.put_tensor(p->name, p->w);
  return ck;
}

models::Checkpoint snapshot_cnn(const models::CnnModel& model, const OptimizerState& opt,
                                std::int64_t epoch, std::uint64_t config_hash) {
  models::Checkpoint ck;
  ck.arch_id = "cnn:" + model.arch().name;
  ck.config_hash = config_hash;
  ck.epoch = epoch;
  std::vector<const models::ParamBlock*> params;
  for (const auto& p : model.params()) params.push_back(&p);
  store_optimizer(ck, opt, params);
  for (const auto* p : params) ck.put_tensor(p->name, p->w);
  return ck;
}

void restore_vae(models::VaeModel& model, const models::Checkpoint& ck) {
  restore_params_from(ck, model.param_blocks(), "vae:" + model.arch().name);
}

void restore_cnn(models::CnnModel& model, const models::Checkpoint& ck) {
  std::vector<models::ParamBlock*> params;
  for (auto& p : model.params()) params.push_back(&p);
  restore_params_from(ck, params, "cnn:" + model.arch().name);
}

TrainResult train_vae(models::VaeModel& model, const data::Dataset& pool,
                      const TrainRunSpec& spec, const EpochCallback& on_epoch) {
  validate_spec(spec, "train_vae");
  const std::size_t n = pool.instances.size();
  if (n == 0) throw std::invalid_argument("train_vae: empty instance pool");

  auto params = model.param_blocks();
  std::vector<const models::ParamBlock*> cparams(params.begin(), params.end());
  const std::size_t bs = static_cast<std::size_t>(spec.batch_size);
  const auto steps_per_epoch = static_cast<std::int64_t>((n + bs - 1) / bs);
  OptimizerState opt = make_optimizer(spec, cparams, steps_per_epoch);

  models::VaeGrads grads = model.make_grads();
  auto grad_ptrs = model.grad_tensors(grads);
  std::vector<const Tensor*> cgrads(grad_ptrs.begin(), grad_ptrs.end());

  std::vector<std::size_t> order(n);

  int start_epoch = 1;
  if (!spec.resume_from.empty()) {
    models::Checkpoint ck = models::read_checkpoint(spec.resume_from);
    restore_vae(model, ck);
    restore_optimizer(opt, ck, cparams);
    start_epoch = static_cast<int>(ck.epoch) + 1;
  }

  std::vector<Tensor> good = save_params(params);
  std::int64_t good_epoch = start_epoch - 1;

  TrainResult res;
  res.completed_epochs = start_epoch - 1;
  const auto write_ck = [&](const OptimizerState& o) {
    models::Checkpoint ck = snapshot_vae(model, o, good_epoch, spec.config_hash);
    ck.put_counter("run.seed", spec.seed);
    write_checkpoint(spec.checkpoint_path, ck);
  };
  for (int e = start_epoch; e <= spec.epochs; ++e) {
    const auto t0 = Clock::now();
    const double lr_eff = opt.effective_lr();
    Rng erng(derive_seed(spec.seed, "vae-epoch:" + std::to_string(e)));
    std::iota(order.begin(), order.end(), std::size_t{0});
    erng.shuffle(order);
    const std::uint64_t noise_seed =
        derive_seed(spec.seed, "vae-noise-epoch:" + std::to_string(e));

    double sum_total = 0.0, sum_rec = 0.0, sum_kl = 0.0;
    std::size_t seen = 0;
    bool bad = false;
    for (std::size_t start = 0; start < n && !bad; start += bs) {
      const std::size_t stop = std::min(start + bs, n);
      std::vector<std::size_t> idx(order.begin() + start, order.begin() + stop);
      Tensor batch = data::stack_batch(pool, idx);
      grads.zero();
      try {
        models::VaeLoss L = model.loss_and_gradients(batch, noise_seed, grads, start);
        if (!std::isfinite(L.total)) throw NumericError("train_vae: non-finite loss");
        const auto b = static_cast<double>(idx.size());
        sum_total += L.total * b;
        sum_rec += L.reconstruction * b;
        sum_kl += L.kl * b;
        clip_global_norm(grad_ptrs, spec.clip_norm);
        optimizer_step(opt, params, cgrads);
        seen += idx.size();
      } catch (const NumericError&) {
        bad = true;
      }
    }
    if (bad) {
      load_params(params, good);
      res.diverged = true;
      break;
    }

    EpochLog log;
    log.epoch = e;
    log.train_loss = sum_total / static_cast<double>(seen);
    log.cce_component = sum_rec / static_cast<double>(seen);
    log.cluster_component = sum_kl / static_cast<double>(seen);
    log.test_accuracy = std::numeric_limits<double>::quiet_NaN();
    log.lr_eff = lr_eff;
    log.wall_seconds = seconds_since(t0);
    res.history.push_back(log);
    if (on_epoch) on_epoch(log);
    res.completed_epochs = e;
    good = save_params(params);
    good_epoch = e;

    if (!spec.checkpoint_path.empty() && spec.checkpoint_every > 0 &&
        e % spec.checkpoint_every == 0 && e != spec.epochs) {
      write_ck(opt);
    }
  }
  if (!spec.checkpoint_path.empty()) write_ck(opt);
  return res;
}

double evaluate_accuracy(const models::CnnModel& model, const data::Dataset& test_set,
                         int batch_size) {
  const std::size_t n = test_set.instances.size();
  if (n == 0) throw std::invalid_argument("evaluate_accuracy: empty test set");
  const auto bs = static_cast<std::size_t>(std::max(1, batch_size));
  std::size_t correct = 0;
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < n; start += bs) {
    const std::size_t stop = std::min(start + bs, n);
    idx.clear();
    for (std::size_t i = start; i < stop; ++i) idx.push_back(i);
    Tensor batch = data::stack_batch(test_set, idx);
    Tensor probs = model.forward(batch);
    const int C = probs.shape[1];
    for (std::size_t i = 0; i < idx.size(); ++i) {
      int best = 0;
      for (int c = 1; c < C; ++c) {
        if (probs.at2(static_cast<int>(i), c) > probs.at2(static_cast<int>(i), best)) best = c;
      }
      if (best == test_set.instances[idx[i]].true_label) ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(n);
}

TrainResult train_classifier(models::CnnModel& model, const ClassifierData& data,
                             const TrainRunSpec& spec, const EpochCallback& on_epoch) {
  validate_spec(spec, "train_classifier");
  if (!data.pool || !data.bags) {
    throw std::invalid_argument("train_classifier: pool and bags are required");
  }
  const data::Dataset& pool = *data.pool;
  const auto& bags = *data.bags;
  if (bags.empty()) throw std::invalid_argument("train_classifier: no bags");
  const bool mixed = spec.loss.kind == models::LossSpec::Kind::CcePlus;

  std::unordered_map<std::string, std::size_t> by_id;
  by_id.reserve(pool.instances.size());
  for (std::size_t i = 0; i < pool.instances.size(); ++i) by_id[pool.instances[i].id] = i;

  std::unordered_map<std::string, int> yhat_by_id;
  if (mixed) {
    if (!data.yhat_cache) {
      throw ConfigurationError(
          "train_classifier: the mixed loss needs a cluster-class cache and none was given");
    }
    yhat_by_id.reserve(data.yhat_cache->size());
    for (const auto& e : *data.yhat_cache) yhat_by_id[e.id] = e.yhat;
  }

  struct Slot {
    std::size_t pool_idx;
    int weak;
    int yhat;
  };
  std::vector<std::vector<Slot>> bag_slots(bags.size());
  std::size_t total = 0;
  for (std::size_t b = 0; b < bags.size(); ++b) {
    bag_slots[b].reserve(bags[b].instance_ids.size());
    for (const auto& id : bags[b].instance_ids) {
      auto it = by_id.find(id);
      if (it == by_id.end()) {
        throw ConfigurationError("train_classifier: bag references unknown instance '" + id + "'");
      }
      Slot s{it->second, bags[b].bag_label, -1};
      if (mixed) {
        auto yit = yhat_by_id.find(id);
        if (yit == yhat_by_id.end()) {
          throw ConfigurationError("train_classifier: no cached cluster-class label for '" + id +
                                   "'");
        }
        s.yhat = yit->second;
      }
      bag_slots[b].push_back(s);
    }
    total += bag_slots[b].size();
  }
  if (total == 0) throw std::invalid_argument("train_classifier: bags are all empty");

  std::vector<models::ParamBlock*> params;
  std::vector<const models::ParamBlock*> cparams;
  for (auto& p : model.params()) {
    params.push_back(&p);
    cparams.push_back(&p);
  }
  const std::size_t bs = static_cast<std::size_t>(spec.batch_size);
  const auto steps_per_epoch = static_cast<std::int64_t>((total + bs - 1) / bs);
  OptimizerState opt = make_optimizer(spec, cparams, steps_per_epoch);

  models::GradBuffer grads = model.make_grads();
  std::vector<Tensor*> grad_ptrs;
  std::vector<const Tensor*> cgrads;
  for (auto& g : grads.g) {
    grad_ptrs.push_back(&g);
    cgrads.push_back(&g);
  }

  std::vector<std::size_t> bag_order(bags.size());

  int start_epoch = 1;
  if (!spec.resume_from.empty()) {
    models::Checkpoint ck = models::read_checkpoint(spec.resume_from);
    restore_cnn(model, ck);
    restore_optimizer(opt, ck, cparams);
    start_epoch = static_cast<int>(ck.epoch) + 1;
  }

  std::vector<Tensor> good = save_params(params);
  std::int64_t good_epoch = start_epoch - 1;

  TrainResult res;
  res.completed_epochs = start_epoch - 1;
  const auto write_ck = [&](const OptimizerState& o) {
    models::Checkpoint ck = snapshot_cnn(model, o, good_epoch, spec.config_hash);
    ck.put_counter("run.seed", spec.seed);
    write_checkpoint(spec.checkpoint_path, ck);
  };
  std::vector<Slot> stream;
  stream.reserve(total);
  std::vector<std::size_t> idx;
  std::vector<int> weak, yhat;
  for (int e = start_epoch; e <= spec.epochs; ++e) {
    const auto t0 = Clock::now();
    const double lr_eff = opt.effective_lr();
    Rng erng(derive_seed(spec.seed, "cnn-epoch:" + std::to_string(e)));
    std::iota(bag_order.begin(), bag_order.end(), std::size_t{0});
    erng.shuffle(bag_order);
    stream.clear();
    for (std::size_t b : bag_order) {
      const std::size_t at = stream.size();
      stream.insert(stream.end(), bag_slots[b].begin(), bag_slots[b].end());
      // in-place within-bag reshuffle
      for (std::size_t i = stream.size() - at; i > 1; --i) {
        std::swap(stream[at + i - 1], stream[at + erng.uniform_index(i)]);
      }
    }
    const std::uint64_t drop_seed = derive_seed(spec.seed, "cnn-drop-epoch:" + std::to_string(e));

    double sum_total = 0.0, sum_weak = 0.0, sum_cluster = 0.0;
    std::size_t seen = 0;
    bool bad = false;
    for (std::size_t start = 0; start < total && !bad; start += bs) {
      const std::size_t stop = std::min(start + bs, total);
      idx.clear();
      weak.clear();
      yhat.clear();
      for (std::size_t i = start; i < stop; ++i) {
        idx.push_back(stream[i].pool_idx);
        weak.push_back(stream[i].weak);
        if (mixed) yhat.push_back(stream[i].yhat);
      }
      Tensor batch = data::stack_batch(pool, idx);
      grads.zero();
      try {
        models::CnnLoss L = model.loss_and_gradients(batch, weak, yhat, spec.loss, grads, true,
                                                     drop_seed, start);
        if (!std::isfinite(L.total)) throw NumericError("train_classifier: non-finite loss");
        const auto b = static_cast<double>(idx.size());
        sum_total += L.total * b;
        sum_weak += L.cce_weak * b;
        sum_cluster += L.cce_cluster * b;
        clip_global_norm(grad_ptrs, spec.clip_norm);
        optimizer_step(opt, params, cgrads);
        seen += idx.size();
      } catch (const NumericError&) {
        bad = true;
      }
    }
    if (bad) {
      load_params(params, good);
      res.diverged = true;
      break;
    }

    EpochLog log;
    log.epoch = e;
    log.train_loss = sum_total / static_cast<double>(seen);
    log.cce_component = sum_weak / static_cast<double>(seen);
    log.cluster_component = sum_cluster / static_cast<double>(seen);
    log.test_accuracy = data.test_set ? evaluate_accuracy(model, *data.test_set)
                                      : std::numeric_limits<double>::quiet_NaN();
    log.lr_eff = lr_eff;
    log.wall_seconds = seconds_since(t0);
    res.history.push_back(log);
    if (on_epoch) on_epoch(log);
    res.completed_epochs = e;
    if (data.test_set) res.final_test_accuracy = log.test_accuracy;
    good = save_params(params);
    good_epoch = e;

    if (!spec.checkpoint_path.empty() && spec.checkpoint_every > 0 &&
        e % spec.checkpoint_every == 0 && e != spec.epochs) {
      write_ck(opt);
    }
  }
  if (!spec.checkpoint_path.empty()) write_ck(opt);
  return res;
}

}  // namespace ccep::training
