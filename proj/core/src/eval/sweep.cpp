#include "ccep/eval/sweep.hpp"

#include <algorithm>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <unordered_map>

#include "ccep/clustering/kmeans.hpp"
#include "ccep/data/bags.hpp"
#include "ccep/eval/latents.hpp"
#include "ccep/models/checkpoint.hpp"
#include "ccep/rng.hpp"

namespace ccep::eval {

namespace {

namespace fs = std::filesystem;

training::OptimizerKind kind_of(const std::string& name) {
  return name == "adam" ? training::OptimizerKind::Adam : training::OptimizerKind::SgdExpDecay;
}

std::string config_line(std::uint64_t chash) {
  char hex[20];
  std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(chash));
  return std::string("# config ") + hex;
}

// Trains the VAE or reuses an on-disk checkpoint stamped with the same
// config hash.
models::VaeModel prepare_vae(const ExperimentConfig& cfg, const data::Dataset& pool,
                             const std::string& out_dir, std::uint64_t chash) {
  const models::VaeArch arch = models::VaeArch::preset(cfg.vae.arch);
  models::VaeModel model(arch, derive_seed(cfg.vae.seed, "init"));
  const std::string ckpt = out_dir + "/vae.ckpt";
  if (fs::exists(ckpt)) {
    models::Checkpoint ck = models::read_checkpoint(ckpt);
    if (ck.config_hash == chash && ck.arch_id == "vae:" + arch.name) {
      training::restore_vae(model, ck);
      return model;
    }
  }
  training::TrainRunSpec spec;
  spec.epochs = cfg.vae.epochs;
  spec.batch_size = cfg.vae.batch_size;
  spec.seed = cfg.vae.seed;
  spec.learning_rate = cfg.vae.learning_rate;
  spec.optimizer = kind_of(cfg.vae.optimizer);
  spec.checkpoint_every = cfg.vae.checkpoint_every;
  spec.checkpoint_path = ckpt;
  spec.config_hash = chash;

  std::ofstream log(out_dir + "/vae_train.log", std::ios::binary);
  log << config_line(chash) << "\n" << training::epoch_log_header() << "\n";
  auto res = training::train_vae(model, pool, spec, [&](const training::EpochLog& l) {
    log << training::format_epoch_log(l) << "\n";
    log.flush();
  });
  if (res.diverged) {
    throw std::runtime_error("sweep: VAE training diverged after epoch " +
                             std::to_string(res.completed_epochs));
  }
  return model;
}

struct CellRunner {
  const ExperimentConfig& cfg;
  const data::Dataset& pool;
  const data::Dataset& test_set;
  const std::string& out_dir;
  std::uint64_t chash;
  const std::vector<std::vector<double>>& features;  // pool-aligned latents
  const std::map<int, clustering::ClusterModel>& centroids_by_k;

  void run(SweepCell& cell) const {
    data::BagDatasetSpec bspec;
    bspec.bag_size = cell.bag_size;
    bspec.num_classes = cfg.dataset.num_classes;
    bspec.distractor_fraction = cfg.dataset.distractor_fraction;
    const int per_class =
        static_cast<int>(pool.instances.size()) / std::max(1, cfg.dataset.num_classes);
    bspec.num_bags_per_class = cfg.dataset.bags_per_class > 0
                                   ? cfg.dataset.bags_per_class
                                   : std::max(1, per_class / cell.bag_size);
    bspec.seed = derive_seed(cell.seed, "bags");
    std::vector<data::Bag> bags = data::make_bags(pool, bspec);

    const std::string stem = out_dir + "/cells/" + cell.method + "_N" +
                             std::to_string(cell.bag_size);
    data::write_manifest(stem + ".manifest", bags);

    std::unordered_map<std::string, std::size_t> by_id;
    by_id.reserve(pool.instances.size());
    for (std::size_t i = 0; i < pool.instances.size(); ++i) by_id[pool.instances[i].id] = i;

    std::vector<clustering::YhatEntry> cache;
    if (cell.k > 0) {
      std::vector<clustering::LabeledPoint> slots;
      for (const auto& bag : bags) {
        for (const auto& id : bag.instance_ids) {
          slots.push_back({features[by_id.at(id)], bag.bag_label});
        }
      }
      clustering::ClusterModel voted =
          clustering::vote_cluster_classes(centroids_by_k.at(cell.k), slots);
      auto assignments = clustering::assign_all(voted, features);
      cache.reserve(assignments.size());
      for (std::size_t i = 0; i < assignments.size(); ++i) {
        cache.push_back({pool.instances[i].id, assignments[i].cluster, assignments[i].label});
      }
    }

    const models::CnnArch arch = models::CnnArch::preset(cfg.classifier.arch);
    models::CnnModel model(arch, derive_seed(cell.seed, "cnn-init"));

    training::TrainRunSpec tspec;
    tspec.epochs = cfg.classifier.epochs;
    tspec.batch_size = cfg.classifier.batch_size;
    tspec.seed = derive_seed(cell.seed, "cnn-train");
    tspec.learning_rate = cfg.classifier.learning_rate;
    tspec.decay_rate = cfg.classifier.decay_rate;
    tspec.optimizer = kind_of(cfg.classifier.optimizer);
    tspec.config_hash = chash;
    if (cell.k > 0) {
      tspec.loss.kind = models::LossSpec::Kind::CcePlus;
      tspec.loss.alpha = cell.alpha;
    } else {
      tspec.loss.kind = models::LossSpec::Kind::Cce;
    }

    training::ClassifierData cdata;
    cdata.pool = &pool;
    cdata.bags = &bags;
    cdata.test_set = &test_set;
    cdata.yhat_cache = cell.k > 0 ? &cache : nullptr;

    std::ofstream log(stem + ".log", std::ios::binary);
    log << config_line(chash) << "\n" << training::epoch_log_header() << "\n";
    auto res = training::train_classifier(model, cdata, tspec,
                                          [&](const training::EpochLog& l) {
                                            log << training::format_epoch_log(l) << "\n";
                                            log.flush();
                                          });
    cell.history = res.history;
    if (res.diverged) {
      throw std::runtime_error("classifier diverged after epoch " +
                               std::to_string(res.completed_epochs));
    }
    cell.accuracy = res.final_test_accuracy;
    cell.ok = true;
  }
};

}  // namespace

SweepResult run_table2_sweep(const ExperimentConfig& cfg, const data::Dataset& pool,
                             const data::Dataset& test_set, const std::string& out_dir,
                             const CellCallback& on_cell) {
  fs::create_directories(out_dir + "/cells");
  const std::uint64_t chash = cfg.hash();

  models::VaeModel vae = prepare_vae(cfg, pool, out_dir, chash);

  auto latent_rows = encode_pool(vae, pool);
  std::vector<std::vector<double>> features;
  features.reserve(latent_rows.size());
  for (auto& r : latent_rows) features.push_back(std::move(r.z));

  std::set<int> ks_needed(cfg.sweep.ks.begin(), cfg.sweep.ks.end());
  if (cfg.sweep.include_alpha_zero) ks_needed.insert(cfg.sweep.alpha_zero_k);

  std::map<int, clustering::ClusterModel> centroids_by_k;
  std::vector<clustering::LabeledPoint> pool_points;
  pool_points.reserve(features.size());
  for (const auto& f : features) pool_points.push_back({f, -1});
  for (int k : ks_needed) {
    clustering::ClusterModel m = clustering::kmeans_fit(
        pool_points, k, derive_seed(cfg.cluster.seed, "k:" + std::to_string(k)),
        cfg.cluster.max_iters, cfg.cluster.tol, cfg.cluster.restarts);
    m.config_hash = chash;
    clustering::write_cluster_model(out_dir + "/clusters_k" + std::to_string(k) + ".model", m);
    centroids_by_k.emplace(k, std::move(m));
  }

  SweepResult result;
  result.bag_sizes = cfg.sweep.bag_sizes;

  auto add_cells = [&](const std::string& method, const std::string& label, int k, double alpha,
                       const std::vector<int>& bag_sizes) {
    result.row_order.push_back(method);
    for (int n : bag_sizes) {
      SweepCell cell;
      cell.method = method;
      cell.label = label;
      cell.bag_size = n;
      cell.k = k;
      cell.alpha = alpha;
      cell.seed = derive_seed(cfg.master_seed, "cell:" + method + ":N=" + std::to_string(n));
      result.cells.push_back(std::move(cell));
    }
  };

  if (cfg.sweep.include_cce) add_cells("cce", "CCE", 0, 1.0, cfg.sweep.bag_sizes);
  for (int k : cfg.sweep.ks) {
    add_cells("cce_plus_k" + std::to_string(k), "CCE+ K=" + std::to_string(k), k,
              cfg.classifier.alpha, cfg.sweep.bag_sizes);
  }
  if (cfg.sweep.include_alpha_zero) {
    add_cells("alpha0_k" + std::to_string(cfg.sweep.alpha_zero_k),
              "CCE+ K=" + std::to_string(cfg.sweep.alpha_zero_k) + " alpha=0",
              cfg.sweep.alpha_zero_k, 0.0, {cfg.sweep.alpha_zero_bag_size});
  }

  CellRunner runner{cfg, pool, test_set, out_dir, chash, features, centroids_by_k};
  for (auto& cell : result.cells) {
    try {
      runner.run(cell);
    } catch (const std::exception& e) {
      cell.ok = false;
      cell.error = e.what();
      result.all_ok = false;
    }
    if (on_cell) on_cell(cell);
  }
  return result;
}

void write_sweep_csv(const std::string& path, const SweepResult& result) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << "method";
  for (int n : result.bag_sizes) out << ",N=" << n;
  out << "\n";
  for (const auto& method : result.row_order) {
    std::string label = method;
    for (const auto& c : result.cells) {
      if (c.method == method) {
        label = c.label;
        break;
      }
    }
    out << label;
    for (int n : result.bag_sizes) {
      const SweepCell* found = nullptr;
      for (const auto& c : result.cells) {
        if (c.method == method && c.bag_size == n) {
          found = &c;
          break;
        }
      }
      out << ",";
      if (!found) {
        out << "-";
      } else if (!found->ok) {
        out << "FAILED";
      } else {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "%.4f", found->accuracy);
        out << buf;
      }
    }
    out << "\n";
  }
  // rows outside the main column grid (single-cell ablations)
  for (const auto& method : result.row_order) {
    for (const auto& c : result.cells) {
      if (c.method != method) continue;
      if (std::find(result.bag_sizes.begin(), result.bag_sizes.end(), c.bag_size) !=
          result.bag_sizes.end()) {
        continue;
      }
      out << c.label << " N=" << c.bag_size << ",";
      if (!c.ok) {
        out << "FAILED";
      } else {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "%.4f", c.accuracy);
        out << buf;
      }
      out << "\n";
    }
  }
  if (!out) throw std::runtime_error("failed writing " + path);
}

void write_sweep_sidecar(const std::string& path, const SweepResult& result,
                         const ExperimentConfig& cfg) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  char hex[20];
  std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(cfg.hash()));
  const std::time_t now = std::time(nullptr);
  char stamp[32];
  std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  out << "# config " << hex << " written " << stamp << "\n";
  out << "method\tbag_size\tk\talpha\tseed\tepochs\tstatus\taccuracy\terror\n";
  for (const auto& c : result.cells) {
    char acc[16];
    std::snprintf(acc, sizeof(acc), "%.4f", c.accuracy);
    out << c.method << "\t" << c.bag_size << "\t" << c.k << "\t" << c.alpha << "\t" << c.seed
        << "\t" << c.history.size() << "\t" << (c.ok ? "ok" : "failed") << "\t"
        << (c.ok ? acc : "-") << "\t" << c.error << "\n";
  }
  if (!out) throw std::runtime_error("failed writing " + path);
}

}  // namespace ccep::eval
