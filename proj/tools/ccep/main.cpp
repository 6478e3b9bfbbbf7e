// ccep - experiment driver for cluster-class cross-entropy training.
//
// Machine-readable key=value summaries go to stdout, progress and errors to
// stderr. Every artifact lands under the configured output directory and is
// stamped with the producing config hash.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <CLI11.hpp>

#include "ccep/clustering/kmeans.hpp"
#include "ccep/config.hpp"
#include "ccep/data/bags.hpp"
#include "ccep/data/dataset.hpp"
#include "ccep/data/png_io.hpp"
#include "ccep/data/synthetic_digits.hpp"
#include "ccep/eval/latents.hpp"
#include "ccep/eval/report.hpp"
#include "ccep/eval/sweep.hpp"
#include "ccep/models/checkpoint.hpp"
#include "ccep/models/cnn.hpp"
#include "ccep/models/vae.hpp"
#include "ccep/rng.hpp"
#include "ccep/training/train.hpp"

namespace fs = std::filesystem;
using namespace ccep;

namespace {

struct GlobalOpts {
  std::string config_path;
  std::string out_dir;
  std::string data_root;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int jobs = 1;
};

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void kv(const std::string& key, const std::string& value) {
  std::cout << key << "=" << value << "\n";
}

void kv(const std::string& key, std::int64_t value) { kv(key, std::to_string(value)); }

void kvf(const std::string& key, double value, const char* spec = "%.6f") {
  char buf[48];
  std::snprintf(buf, sizeof(buf), spec, value);
  kv(key, buf);
}

// Data root precedence: --data-root flag, then CCEP_DATA_ROOT, then the
// config file.
ExperimentConfig load_config(const GlobalOpts& g) {
  ExperimentConfig cfg;
  const std::uint64_t* override_ptr = g.seed_set ? &g.seed : nullptr;
  if (!g.config_path.empty()) {
    cfg = parse_config_file(g.config_path, override_ptr);
  } else {
    cfg = parse_config_text("", "<defaults>", override_ptr);
  }
  if (!g.out_dir.empty()) cfg.out_dir = g.out_dir;
  if (!g.data_root.empty()) {
    cfg.dataset.data_root = g.data_root;
  } else if (const char* env = std::getenv("CCEP_DATA_ROOT"); env != nullptr && *env != '\0') {
    cfg.dataset.data_root = env;
  }
  validate_config(cfg);
  return cfg;
}

struct Paths {
  std::string out;
  std::string manifest() const { return out + "/bags.manifest"; }
  std::string vae_ckpt() const { return out + "/vae.ckpt"; }
  std::string vae_log() const { return out + "/vae_train.log"; }
  std::string clusters() const { return out + "/clusters.model"; }
  std::string yhat() const { return out + "/yhat.cache"; }
  std::string cnn_ckpt() const { return out + "/cnn.ckpt"; }
  std::string cnn_log() const { return out + "/cnn_train.log"; }
  std::string report() const { return out + "/report.txt"; }
  std::string roc() const { return out + "/roc.csv"; }
  std::string table2() const { return out + "/table2.csv"; }
  std::string table2_meta() const { return out + "/table2.meta.tsv"; }
  std::string latents() const { return out + "/latents.csv"; }
  std::string sheet() const { return out + "/bags_sheet.png"; }
};

Paths make_paths(const ExperimentConfig& cfg) {
  fs::create_directories(cfg.out_dir);
  return Paths{cfg.out_dir};
}

data::Dataset subset_per_class(data::Dataset ds, int per_class) {
  if (per_class <= 0) return ds;
  std::vector<int> taken(static_cast<std::size_t>(std::max(1, ds.num_classes)), 0);
  std::vector<data::ImageInstance> kept;
  for (auto& inst : ds.instances) {
    if (inst.true_label < 0 || inst.true_label >= ds.num_classes) continue;
    if (taken[static_cast<std::size_t>(inst.true_label)] >= per_class) continue;
    ++taken[static_cast<std::size_t>(inst.true_label)];
    kept.push_back(std::move(inst));
  }
  ds.instances = std::move(kept);
  return ds;
}

struct LoadedData {
  data::Dataset train;
  data::Dataset test;
};

// The training pool and test set are regenerated from the config on every
// invocation, so instance ids in manifests and caches stay aligned across
// subcommands without shipping pixels between them.
LoadedData materialize(const ExperimentConfig& cfg) {
  LoadedData d;
  if (cfg.dataset.source == "synthetic") {
    data::DigitGenSpec tr;
    tr.per_class = cfg.dataset.train_per_class;
    tr.seed = derive_seed(cfg.dataset.seed, "synth-train");
    tr.noise_sigma = cfg.dataset.noise_sigma;
    tr.id_prefix = "tr";
    d.train = data::make_digit_dataset(tr);
    data::DigitGenSpec te = tr;
    te.per_class = cfg.dataset.test_per_class;
    te.seed = derive_seed(cfg.dataset.seed, "synth-test");
    te.id_prefix = "te";
    d.test = data::make_digit_dataset(te);
  } else {
    if (cfg.dataset.data_root.empty()) {
      throw ConfigError(
          "dataset.source=idx needs a data root "
          "(--data-root, CCEP_DATA_ROOT or dataset.data_root)");
    }
    auto [train, test] = data::load_mnist(cfg.dataset.data_root);
    d.train = subset_per_class(std::move(train), cfg.dataset.train_per_class);
    d.test = subset_per_class(std::move(test), cfg.dataset.test_per_class);
  }
  return d;
}

data::BagDatasetSpec bag_spec_for(const ExperimentConfig& cfg, const data::Dataset& pool) {
  data::BagDatasetSpec spec;
  spec.bag_size = cfg.dataset.bag_size;
  spec.num_classes = cfg.dataset.num_classes;
  spec.distractor_fraction = cfg.dataset.distractor_fraction;
  const int per_class =
      static_cast<int>(pool.instances.size()) / std::max(1, cfg.dataset.num_classes);
  spec.num_bags_per_class = cfg.dataset.bags_per_class > 0
                                ? cfg.dataset.bags_per_class
                                : std::max(1, per_class / std::max(1, cfg.dataset.bag_size));
  spec.seed = derive_seed(cfg.dataset.seed, "bags");
  return spec;
}

training::OptimizerKind optimizer_kind(const std::string& name) {
  return name == "adam" ? training::OptimizerKind::Adam : training::OptimizerKind::SgdExpDecay;
}

models::VaeModel load_vae(const ExperimentConfig& cfg, const Paths& paths) {
  if (!fs::exists(paths.vae_ckpt())) {
    throw training::ConfigurationError("missing " + paths.vae_ckpt() + "; run train-vae first");
  }
  models::Checkpoint ck = models::read_checkpoint(paths.vae_ckpt());
  const std::string want = "vae:" + cfg.vae.arch;
  if (ck.arch_id != want) {
    throw models::CheckpointError("vae checkpoint is " + ck.arch_id + ", config wants " + want);
  }
  if (ck.config_hash != cfg.hash()) {
    std::cerr << "warning: " << paths.vae_ckpt() << " was produced by config "
              << hex64(ck.config_hash) << ", current config is " << hex64(cfg.hash()) << "\n";
  }
  models::VaeModel model(models::VaeArch::preset(cfg.vae.arch), derive_seed(cfg.vae.seed, "init"));
  training::restore_vae(model, ck);
  return model;
}

// ---- gen-bags ------------------------------------------------------------

int cmd_gen_bags(const GlobalOpts& g) {
  ExperimentConfig cfg = load_config(g);
  Paths paths = make_paths(cfg);
  LoadedData data = materialize(cfg);

  data::BagDatasetSpec spec = bag_spec_for(cfg, data.train);
  std::vector<data::Bag> bags = data::make_bags(data.train, spec);
  data::write_manifest(paths.manifest(), bags);

  std::map<std::string, std::string> meta;
  meta["config"] = hex64(cfg.hash());
  meta["num_bags"] = std::to_string(bags.size());
  meta["bag_size"] = std::to_string(spec.bag_size);
  meta["bags_per_class"] = std::to_string(spec.num_bags_per_class);
  meta["num_classes"] = std::to_string(spec.num_classes);
  {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", spec.distractor_fraction);
    meta["distractor_fraction"] = buf;
  }
  meta["matching_count"] = std::to_string(data::matching_count_for(spec));
  meta["unique_instances"] = std::to_string(data::unique_instance_ids(bags).size());
  meta["pool_size"] = std::to_string(data.train.instances.size());
  data::write_manifest_meta(paths.manifest(), meta);

  kv("manifest", paths.manifest());
  kv("bags", static_cast<std::int64_t>(bags.size()));
  kv("bag_size", spec.bag_size);
  kv("matching_count", data::matching_count_for(spec));
  kvf("distractor_fraction", spec.distractor_fraction, "%g");
  kv("unique_instances", static_cast<std::int64_t>(data::unique_instance_ids(bags).size()));
  kv("config", hex64(cfg.hash()));
  return 0;
}

// ---- train-vae -----------------------------------------------------------

int cmd_train_vae(const GlobalOpts& g, bool resume, const std::string& resume_from) {
  ExperimentConfig cfg = load_config(g);
  Paths paths = make_paths(cfg);
  LoadedData data = materialize(cfg);

  models::VaeModel model(models::VaeArch::preset(cfg.vae.arch), derive_seed(cfg.vae.seed, "init"));

  training::TrainRunSpec spec;
  spec.epochs = cfg.vae.epochs;
  spec.batch_size = cfg.vae.batch_size;
  spec.seed = cfg.vae.seed;
  spec.learning_rate = cfg.vae.learning_rate;
  spec.optimizer = optimizer_kind(cfg.vae.optimizer);
  spec.checkpoint_every = cfg.vae.checkpoint_every;
  spec.checkpoint_path = paths.vae_ckpt();
  spec.config_hash = cfg.hash();
  spec.jobs = g.jobs;
  if (!resume_from.empty()) {
    spec.resume_from = resume_from;
  } else if (resume) {
    spec.resume_from = paths.vae_ckpt();
  }
  if (!spec.resume_from.empty() && !fs::exists(spec.resume_from)) {
    throw training::ConfigurationError("resume checkpoint not found: " + spec.resume_from);
  }

  std::ofstream log(paths.vae_log(), std::ios::binary);
  if (!log) throw std::runtime_error("cannot open " + paths.vae_log() + " for writing");
  log << "# config " << hex64(cfg.hash()) << "\n" << training::epoch_log_header() << "\n";

  auto result = training::train_vae(model, data.train, spec, [&](const training::EpochLog& l) {
    log << training::format_epoch_log(l) << "\n";
    log.flush();
    std::fprintf(stderr, "[vae] epoch %d/%d loss %.6f recon %.6f kl %.6f (%.1fs)\n", l.epoch,
                 spec.epochs, l.train_loss, l.cce_component, l.cluster_component, l.wall_seconds);
  });

  kv("checkpoint", paths.vae_ckpt());
  kv("log", paths.vae_log());
  kv("epochs_completed", result.completed_epochs);
  if (!result.history.empty()) kvf("final_loss", result.history.back().train_loss, "%.9g");
  kv("diverged", result.diverged ? 1 : 0);
  kv("config", hex64(cfg.hash()));
  if (result.diverged) {
    std::cerr << "error: training diverged after epoch " << result.completed_epochs
              << "; checkpoint holds the last finite state\n";
    return 1;
  }
  return 0;
}

// ---- fit-clusters --------------------------------------------------------

int cmd_fit_clusters(const GlobalOpts& g) {
  ExperimentConfig cfg = load_config(g);
  Paths paths = make_paths(cfg);
  if (!fs::exists(paths.manifest())) {
    throw training::ConfigurationError("missing " + paths.manifest() + "; run gen-bags first");
  }
  LoadedData data = materialize(cfg);
  models::VaeModel vae = load_vae(cfg, paths);

  std::vector<eval::LatentRow> rows = eval::encode_pool(vae, data.train);
  std::unordered_map<std::string, std::size_t> index;
  index.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) index[rows[i].id] = i;

  // Centroids come from each distinct instance once; the cluster-class vote
  // runs over manifest slots so repeated instances count every occurrence.
  std::vector<clustering::LabeledPoint> pool_points(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) pool_points[i].feature = rows[i].z;

  clustering::ClusterModel model =
      clustering::kmeans_fit(pool_points, cfg.cluster.k, cfg.cluster.seed, cfg.cluster.max_iters,
                             cfg.cluster.tol, cfg.cluster.restarts);

  std::vector<data::Bag> bags = data::read_manifest(paths.manifest());
  std::vector<clustering::LabeledPoint> slots;
  for (const auto& bag : bags) {
    for (const auto& id : bag.instance_ids) {
      auto it = index.find(id);
      if (it == index.end()) {
        throw training::ConfigurationError("manifest instance " + id +
                                           " is not in the configured pool");
      }
      slots.push_back({rows[it->second].z, bag.bag_label});
    }
  }
  model = clustering::vote_cluster_classes(std::move(model), slots);
  model.config_hash = cfg.hash();
  clustering::write_cluster_model(paths.clusters(), model);

  std::vector<std::vector<double>> features(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) features[i] = rows[i].z;
  std::vector<clustering::Assignment> assigned = clustering::assign_all(model, features);
  std::vector<clustering::YhatEntry> entries(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    entries[i] = {rows[i].id, assigned[i].cluster, assigned[i].label};
  }
  clustering::write_yhat_cache(paths.yhat(), entries, cfg.hash());

  kv("model", paths.clusters());
  kv("yhat_cache", paths.yhat());
  kv("k", model.k);
  kvf("inertia", model.inertia, "%.9g");
  kv("iterations", model.iterations);
  kv("instances", static_cast<std::int64_t>(entries.size()));
  kv("config", hex64(cfg.hash()));
  return 0;
}

// ---- train-cnn -----------------------------------------------------------

int cmd_train_cnn(const GlobalOpts& g, bool resume, const std::string& resume_from) {
  ExperimentConfig cfg = load_config(g);
  Paths paths = make_paths(cfg);
  if (!fs::exists(paths.manifest())) {
    throw training::ConfigurationError("missing " + paths.manifest() + "; run gen-bags first");
  }
  const bool mixed = cfg.classifier.loss == "cce_plus";
  if (mixed && !fs::exists(paths.yhat())) {
    throw training::ConfigurationError("loss cce_plus needs " + paths.yhat() +
                                       "; run fit-clusters first");
  }

  LoadedData data = materialize(cfg);
  std::vector<data::Bag> bags = data::read_manifest(paths.manifest());
  std::vector<clustering::YhatEntry> cache;
  if (mixed) cache = clustering::read_yhat_cache(paths.yhat());

  models::CnnModel model(models::CnnArch::preset(cfg.classifier.arch),
                         derive_seed(cfg.classifier.seed, "init"));

  training::TrainRunSpec spec;
  spec.epochs = cfg.classifier.epochs;
  spec.batch_size = cfg.classifier.batch_size;
  spec.seed = cfg.classifier.seed;
  spec.learning_rate = cfg.classifier.learning_rate;
  spec.decay_rate = cfg.classifier.decay_rate;
  spec.optimizer = optimizer_kind(cfg.classifier.optimizer);
  spec.loss.kind = mixed ? models::LossSpec::Kind::CcePlus : models::LossSpec::Kind::Cce;
  spec.loss.alpha = mixed ? cfg.classifier.alpha : 1.0;
  spec.checkpoint_path = paths.cnn_ckpt();
  spec.config_hash = cfg.hash();
  spec.jobs = g.jobs;
  if (!resume_from.empty()) {
    spec.resume_from = resume_from;
  } else if (resume) {
    spec.resume_from = paths.cnn_ckpt();
  }
  if (!spec.resume_from.empty() && !fs::exists(spec.resume_from)) {
    throw training::ConfigurationError("resume checkpoint not found: " + spec.resume_from);
  }

  training::ClassifierData cdata;
  cdata.pool = &data.train;
  cdata.bags = &bags;
  cdata.test_set = &data.test;
  cdata.yhat_cache = mixed ? &cache : nullptr;

  std::ofstream log(paths.cnn_log(), std::ios::binary);
  if (!log) throw std::runtime_error("cannot open " + paths.cnn_log() + " for writing");
  log << "# config " << hex64(cfg.hash()) << "\n" << training::epoch_log_header() << "\n";

  auto result =
      training::train_classifier(model, cdata, spec, [&](const training::EpochLog& l) {
        log << training::format_epoch_log(l) << "\n";
        log.flush();
        std::fprintf(stderr, "[cnn] epoch %d/%d loss %.6f acc %.4f lr %.4g (%.1fs)\n", l.epoch,
                     spec.epochs, l.train_loss, l.test_accuracy, l.lr_eff, l.wall_seconds);
      });

  kv("checkpoint", paths.cnn_ckpt());
  kv("log", paths.cnn_log());
  kv("epochs_completed", result.completed_epochs);
  if (!result.history.empty()) kvf("final_loss", result.history.back().train_loss, "%.9g");
  kvf("test_accuracy", result.final_test_accuracy);
  kv("diverged", result.diverged ? 1 : 0);
  kv("config", hex64(cfg.hash()));
  if (result.diverged) {
    std::cerr << "error: training diverged after epoch " << result.completed_epochs
              << "; checkpoint holds the last finite state\n";
    return 1;
  }
  return 0;
}

// ---- evaluate ------------------------------------------------------------

int cmd_evaluate(const GlobalOpts& g, bool force) {
  ExperimentConfig cfg = load_config(g);
  Paths paths = make_paths(cfg);
  if (!fs::exists(paths.cnn_ckpt())) {
    throw training::ConfigurationError("missing " + paths.cnn_ckpt() + "; run train-cnn first");
  }
  models::Checkpoint ck = models::read_checkpoint(paths.cnn_ckpt());
  const std::string want = "cnn:" + cfg.classifier.arch;
  if (ck.arch_id != want) {
    throw models::CheckpointError("checkpoint is " + ck.arch_id + ", config wants " + want);
  }
  if (ck.config_hash != cfg.hash() && !force) {
    throw models::CheckpointError("checkpoint config " + hex64(ck.config_hash) +
                                  " does not match current config " + hex64(cfg.hash()) +
                                  " (pass --force to evaluate anyway)");
  }

  LoadedData data = materialize(cfg);
  models::CnnModel model(models::CnnArch::preset(cfg.classifier.arch),
                         derive_seed(cfg.classifier.seed, "init"));
  training::restore_cnn(model, ck);

  // The report carries the hash of the config that trained the model; under
  // --force that is the honest provenance of the numbers.
  eval::EvalReport report = eval::evaluate_model(model, data.test, ck.config_hash);
  eval::write_report(paths.report(), report);
  eval::write_roc_csv(paths.roc(), report);

  kv("report", paths.report());
  kv("roc", paths.roc());
  kv("count", static_cast<std::int64_t>(report.count));
  kvf("accuracy", report.accuracy);
  kvf("macro_auc", report.macro_auc);
  kv("config", hex64(report.config_hash));
  return 0;
}

// ---- sweep ---------------------------------------------------------------

int cmd_sweep(const GlobalOpts& g) {
  ExperimentConfig cfg = load_config(g);
  Paths paths = make_paths(cfg);
  LoadedData data = materialize(cfg);

  eval::SweepResult result = eval::run_table2_sweep(
      cfg, data.train, data.test, cfg.out_dir, [&](const eval::SweepCell& cell) {
        if (cell.ok) {
          std::fprintf(stderr, "[sweep] %s N=%d accuracy %.4f\n", cell.method.c_str(),
                       cell.bag_size, cell.accuracy);
        } else {
          std::fprintf(stderr, "[sweep] %s N=%d FAILED: %s\n", cell.method.c_str(),
                       cell.bag_size, cell.error.c_str());
        }
      });
  eval::write_sweep_csv(paths.table2(), result);
  eval::write_sweep_sidecar(paths.table2_meta(), result, cfg);

  int failed = 0;
  for (const auto& cell : result.cells) {
    const std::string key = "cell_" + cell.method + "_N" + std::to_string(cell.bag_size);
    if (cell.ok) {
      kvf(key, cell.accuracy);
    } else {
      kv(key, "FAILED");
      ++failed;
    }
  }
  kv("table", paths.table2());
  kv("meta", paths.table2_meta());
  kv("cells", static_cast<std::int64_t>(result.cells.size()));
  kv("failed", failed);
  kv("config", hex64(cfg.hash()));
  return result.all_ok ? 0 : 1;
}

// ---- export-latents ------------------------------------------------------

int cmd_export_latents(const GlobalOpts& g, const std::string& manifest_path) {
  ExperimentConfig cfg = load_config(g);
  Paths paths = make_paths(cfg);
  LoadedData data = materialize(cfg);
  models::VaeModel vae = load_vae(cfg, paths);

  std::vector<eval::LatentRow> rows = eval::encode_pool(vae, data.train);
  if (!manifest_path.empty()) {
    std::vector<data::Bag> bags = data::read_manifest(manifest_path);
    // First bag that mentions an instance decides its weak label.
    std::unordered_map<std::string, int> weak;
    for (const auto& bag : bags) {
      for (const auto& id : bag.instance_ids) weak.emplace(id, bag.bag_label);
    }
    for (auto& row : rows) {
      auto it = weak.find(row.id);
      if (it != weak.end()) row.weak_label = it->second;
    }
  }
  eval::write_latents_csv(paths.latents(), rows, cfg.hash());

  kv("csv", paths.latents());
  kv("instances", static_cast<std::int64_t>(rows.size()));
  kv("latent_dim", rows.empty() ? 0 : static_cast<std::int64_t>(rows[0].z.size()));
  kv("config", hex64(cfg.hash()));
  return 0;
}

// ---- render-bags ---------------------------------------------------------

double& pix(Tensor& t, int y, int x) {
  return t.at((static_cast<std::size_t>(y) * t.shape[1] + x) * t.shape[2]);
}

double pix(const Tensor& t, int y, int x) {
  return t.at((static_cast<std::size_t>(y) * t.shape[1] + x) * t.shape[2]);
}

int cmd_render_bags(const GlobalOpts& g, int num_bags, int bag_size) {
  ExperimentConfig cfg = load_config(g);
  Paths paths = make_paths(cfg);
  LoadedData data = materialize(cfg);

  data::BagDatasetSpec spec;
  spec.bag_size = bag_size;
  spec.num_classes = cfg.dataset.num_classes;
  spec.distractor_fraction = cfg.dataset.distractor_fraction;
  spec.num_bags_per_class = 1;
  spec.seed = derive_seed(cfg.dataset.seed, "render");
  std::vector<int> classes;
  for (int c = 0; c < num_bags; ++c) classes.push_back(c % cfg.dataset.num_classes);
  std::vector<data::Bag> bags = data::make_bags_for_classes(data.train, spec, classes);

  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < data.train.instances.size(); ++i) {
    index[data.train.instances[i].id] = i;
  }

  const int cell = 28;
  const int gap = 2;
  const int height = static_cast<int>(bags.size()) * cell +
                     (static_cast<int>(bags.size()) - 1) * gap;
  const int width = cell + 2 * gap + bag_size * cell + (bag_size - 1) * gap;
  Tensor sheet({height, width, 1});
  sheet.fill(0.0);
  // Faint divider between the label column and the bag contents.
  for (int y = 0; y < height; ++y) {
    pix(sheet, y, cell + gap / 2) = 0.25;
  }

  for (std::size_t b = 0; b < bags.size(); ++b) {
    const int y0 = static_cast<int>(b) * (cell + gap);
    Tensor glyph = data::render_digit(bags[b].bag_label, 0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.6, 0.0);
    for (int y = 0; y < cell; ++y) {
      for (int x = 0; x < cell; ++x) pix(sheet, y0 + y, x) = pix(glyph, y, x);
    }
    for (int s = 0; s < bag_size; ++s) {
      const auto& id = bags[b].instance_ids[static_cast<std::size_t>(s)];
      const Tensor& img = data.train.instances[index.at(id)].pixels;
      const int x0 = cell + 2 * gap + s * (cell + gap);
      for (int y = 0; y < cell; ++y) {
        for (int x = 0; x < cell; ++x) pix(sheet, y0 + y, x0 + x) = pix(img, y, x);
      }
    }
  }
  data::write_png(paths.sheet(), sheet);
  {
    std::ofstream meta(paths.sheet() + ".meta", std::ios::binary);
    meta << "config " << hex64(cfg.hash()) << "\n";
    meta << "bags " << bags.size() << "\n";
    meta << "bag_size " << bag_size << "\n";
  }

  kv("png", paths.sheet());
  kv("bags", static_cast<std::int64_t>(bags.size()));
  kv("bag_size", bag_size);
  kv("config", hex64(cfg.hash()));
  return 0;
}

// ---- make-digits ---------------------------------------------------------

int cmd_make_digits(const GlobalOpts& g, const std::string& dir) {
  ExperimentConfig cfg = load_config(g);
  fs::create_directories(dir);
  data::write_digit_idx_files(dir, cfg.dataset.train_per_class, cfg.dataset.test_per_class,
                              cfg.dataset.seed, cfg.dataset.noise_sigma);
  kv("dir", dir);
  kv("train", static_cast<std::int64_t>(cfg.dataset.train_per_class) * 10);
  kv("test", static_cast<std::int64_t>(cfg.dataset.test_per_class) * 10);
  kv("config", hex64(cfg.hash()));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cluster-class cross-entropy experiment driver"};
  app.require_subcommand(1);

  GlobalOpts g;
  app.add_option("--config", g.config_path, "experiment config file (INI sections)");
  app.add_option("--out", g.out_dir, "output directory (overrides the config)");
  app.add_option("--data-root", g.data_root,
                 "IDX data directory (overrides CCEP_DATA_ROOT and the config)");
  app.add_option_function<std::uint64_t>(
      "--seed",
      [&g](std::uint64_t v) {
        g.seed = v;
        g.seed_set = true;
      },
      "master seed override");
  app.add_option("--jobs", g.jobs, "worker threads for data-parallel phases")
      ->check(CLI::PositiveNumber);

  int rc = 0;

  auto* gen = app.add_subcommand("gen-bags", "synthesize weak bags and write the manifest");
  gen->fallthrough();
  gen->callback([&] { rc = cmd_gen_bags(g); });

  bool vae_resume = false;
  std::string vae_resume_from;
  auto* tv = app.add_subcommand("train-vae", "train the unsupervised encoder on the pool");
  tv->fallthrough();
  tv->add_flag("--resume", vae_resume, "continue from the output checkpoint");
  tv->add_option("--resume-from", vae_resume_from, "continue from an explicit checkpoint");
  tv->callback([&] { rc = cmd_train_vae(g, vae_resume, vae_resume_from); });

  auto* fc = app.add_subcommand("fit-clusters",
                                "k-means the latent space and vote cluster-class labels");
  fc->fallthrough();
  fc->callback([&] { rc = cmd_fit_clusters(g); });

  bool cnn_resume = false;
  std::string cnn_resume_from;
  auto* tc = app.add_subcommand("train-cnn", "train the classifier on weakly labeled bags");
  tc->fallthrough();
  tc->add_flag("--resume", cnn_resume, "continue from the output checkpoint");
  tc->add_option("--resume-from", cnn_resume_from, "continue from an explicit checkpoint");
  tc->callback([&] { rc = cmd_train_cnn(g, cnn_resume, cnn_resume_from); });

  bool force = false;
  auto* ev = app.add_subcommand("evaluate", "accuracy, confusion and ROC/AUC on the test set");
  ev->fallthrough();
  ev->add_flag("--force", force, "evaluate even when the checkpoint config differs");
  ev->callback([&] { rc = cmd_evaluate(g, force); });

  auto* sw = app.add_subcommand("sweep", "full bag-size/method accuracy grid");
  sw->fallthrough();
  sw->callback([&] { rc = cmd_sweep(g); });

  std::string manifest_path;
  auto* ex = app.add_subcommand("export-latents", "write pool encodings as CSV");
  ex->fallthrough();
  ex->add_option("--manifest", manifest_path, "manifest supplying weak labels");
  ex->callback([&] { rc = cmd_export_latents(g, manifest_path); });

  int render_bag_count = 5;
  int render_bag_size = 9;
  auto* rb = app.add_subcommand("render-bags", "contact sheet of sample bags as PNG");
  rb->fallthrough();
  rb->add_option("--bags", render_bag_count, "number of bags to draw")->check(CLI::PositiveNumber);
  rb->add_option("--bag-size", render_bag_size, "instances per bag")->check(CLI::PositiveNumber);
  rb->callback([&] { rc = cmd_render_bags(g, render_bag_count, render_bag_size); });

  std::string digits_dir;
  auto* md = app.add_subcommand("make-digits", "write the synthetic digit set as IDX files");
  md->fallthrough();
  md->add_option("--dir", digits_dir, "target directory")->required();
  md->callback([&] { rc = cmd_make_digits(g, digits_dir); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return rc;
}
