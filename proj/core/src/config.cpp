#include "ccep/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "ccep/rng.hpp"

namespace ccep {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

struct Kv {
  std::string section;  // "" for top level
  std::string key;
  std::string value;
  std::string where;  // origin:line for error messages
};

long long parse_int(const Kv& kv) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(kv.value, &used);
    if (used != kv.value.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ConfigError(kv.where + ": '" + kv.key + "' needs an integer, got '" + kv.value + "'");
  }
}

std::uint64_t parse_u64(const Kv& kv) {
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(kv.value, &used);
    if (used != kv.value.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ConfigError(kv.where + ": '" + kv.key + "' needs an unsigned integer, got '" +
                      kv.value + "'");
  }
}

double parse_real(const Kv& kv) {
  try {
    std::size_t used = 0;
    const double v = std::stod(kv.value, &used);
    if (used != kv.value.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ConfigError(kv.where + ": '" + kv.key + "' needs a number, got '" + kv.value + "'");
  }
}

bool parse_bool(const Kv& kv) {
  if (kv.value == "true" || kv.value == "1" || kv.value == "yes") return true;
  if (kv.value == "false" || kv.value == "0" || kv.value == "no") return false;
  throw ConfigError(kv.where + ": '" + kv.key + "' needs true/false, got '" + kv.value + "'");
}

std::vector<int> parse_int_list(const Kv& kv) {
  std::vector<int> out;
  std::istringstream is(kv.value);
  std::string tok;
  while (std::getline(is, tok, ',')) {
    tok = trim(tok);
    if (tok.empty()) continue;
    Kv one = kv;
    one.value = tok;
    out.push_back(static_cast<int>(parse_int(one)));
  }
  if (out.empty()) throw ConfigError(kv.where + ": '" + kv.key + "' needs a list of integers");
  return out;
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text, const std::string& origin,
                                   const std::uint64_t* master_override) {
  ExperimentConfig cfg;
  bool dataset_seed_set = false, vae_seed_set = false, cluster_seed_set = false,
       classifier_seed_set = false;

  std::istringstream in(text);
  std::string raw, section;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string line = raw;
    const auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = origin + ":" + std::to_string(lineno);

    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + ": unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section != "dataset" && section != "vae" && section != "cluster" &&
          section != "classifier" && section != "sweep") {
        throw ConfigError(where + ": unknown section [" + section + "]");
      }
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
    Kv kv{section, trim(line.substr(0, eq)), trim(line.substr(eq + 1)), where};
    if (kv.key.empty()) throw ConfigError(where + ": empty key");

    if (section.empty()) {
      if (kv.key == "out_dir") {
        cfg.out_dir = kv.value;
      } else if (kv.key == "master_seed") {
        cfg.master_seed = parse_u64(kv);
      } else {
        throw ConfigError(where + ": unknown top-level key '" + kv.key + "'");
      }
    } else if (section == "dataset") {
      auto& d = cfg.dataset;
      if (kv.key == "source") {
        d.source = kv.value;
      } else if (kv.key == "data_root") {
        d.data_root = kv.value;
      } else if (kv.key == "train_per_class") {
        d.train_per_class = static_cast<int>(parse_int(kv));
      } else if (kv.key == "test_per_class") {
        d.test_per_class = static_cast<int>(parse_int(kv));
      } else if (kv.key == "noise_sigma") {
        d.noise_sigma = parse_real(kv);
      } else if (kv.key == "num_classes") {
        d.num_classes = static_cast<int>(parse_int(kv));
      } else if (kv.key == "bag_size") {
        d.bag_size = static_cast<int>(parse_int(kv));
      } else if (kv.key == "bags_per_class") {
        d.bags_per_class = static_cast<int>(parse_int(kv));
      } else if (kv.key == "distractor_fraction") {
        d.distractor_fraction = parse_real(kv);
      } else if (kv.key == "seed") {
        d.seed = parse_u64(kv);
        dataset_seed_set = true;
      } else {
        throw ConfigError(where + ": unknown [dataset] key '" + kv.key + "'");
      }
    } else if (section == "vae") {
      auto& v = cfg.vae;
      if (kv.key == "arch") {
        v.arch = kv.value;
      } else if (kv.key == "epochs") {
        v.epochs = static_cast<int>(parse_int(kv));
      } else if (kv.key == "batch_size") {
        v.batch_size = static_cast<int>(parse_int(kv));
      } else if (kv.key == "learning_rate") {
        v.learning_rate = parse_real(kv);
      } else if (kv.key == "optimizer") {
        v.optimizer = kv.value;
      } else if (kv.key == "checkpoint_every") {
        v.checkpoint_every = static_cast<int>(parse_int(kv));
      } else if (kv.key == "seed") {
        v.seed = parse_u64(kv);
        vae_seed_set = true;
      } else {
        throw ConfigError(where + ": unknown [vae] key '" + kv.key + "'");
      }
    } else if (section == "cluster") {
      auto& c = cfg.cluster;
      if (kv.key == "k") {
        c.k = static_cast<int>(parse_int(kv));
      } else if (kv.key == "max_iters") {
        c.max_iters = static_cast<int>(parse_int(kv));
      } else if (kv.key == "tol") {
        c.tol = parse_real(kv);
      } else if (kv.key == "restarts") {
        c.restarts = static_cast<int>(parse_int(kv));
      } else if (kv.key == "seed") {
        c.seed = parse_u64(kv);
        cluster_seed_set = true;
      } else {
        throw ConfigError(where + ": unknown [cluster] key '" + kv.key + "'");
      }
    } else if (section == "classifier") {
      auto& c = cfg.classifier;
      if (kv.key == "arch") {
        c.arch = kv.value;
      } else if (kv.key == "loss") {
        c.loss = kv.value;
      } else if (kv.key == "alpha") {
        c.alpha = parse_real(kv);
      } else if (kv.key == "epochs") {
        c.epochs = static_cast<int>(parse_int(kv));
      } else if (kv.key == "batch_size") {
        c.batch_size = static_cast<int>(parse_int(kv));
      } else if (kv.key == "learning_rate") {
        c.learning_rate = parse_real(kv);
      } else if (kv.key == "decay_rate") {
        c.decay_rate = parse_real(kv);
      } else if (kv.key == "optimizer") {
        c.optimizer = kv.value;
      } else if (kv.key == "seed") {
        c.seed = parse_u64(kv);
        classifier_seed_set = true;
      } else {
        throw ConfigError(where + ": unknown [classifier] key '" + kv.key + "'");
      }
    } else if (section == "sweep") {
      auto& s = cfg.sweep;
      if (kv.key == "bag_sizes") {
        s.bag_sizes = parse_int_list(kv);
      } else if (kv.key == "ks") {
        s.ks = parse_int_list(kv);
      } else if (kv.key == "include_cce") {
        s.include_cce = parse_bool(kv);
      } else if (kv.key == "include_alpha_zero") {
        s.include_alpha_zero = parse_bool(kv);
      } else if (kv.key == "alpha_zero_k") {
        s.alpha_zero_k = static_cast<int>(parse_int(kv));
      } else if (kv.key == "alpha_zero_bag_size") {
        s.alpha_zero_bag_size = static_cast<int>(parse_int(kv));
      } else {
        throw ConfigError(where + ": unknown [sweep] key '" + kv.key + "'");
      }
    }
  }

  if (master_override) cfg.master_seed = *master_override;
  if (!dataset_seed_set) cfg.dataset.seed = derive_seed(cfg.master_seed, "dataset");
  if (!vae_seed_set) cfg.vae.seed = derive_seed(cfg.master_seed, "vae");
  if (!cluster_seed_set) cfg.cluster.seed = derive_seed(cfg.master_seed, "cluster");
  if (!classifier_seed_set) cfg.classifier.seed = derive_seed(cfg.master_seed, "classifier");

  validate_config(cfg);
  return cfg;
}

ExperimentConfig parse_config_file(const std::string& path,
                                   const std::uint64_t* master_override) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path, master_override);
}

void validate_config(const ExperimentConfig& cfg) {
  const auto& d = cfg.dataset;
  if (d.source != "synthetic" && d.source != "idx") {
    throw ConfigError("dataset.source must be 'synthetic' or 'idx', got '" + d.source + "'");
  }
  if (d.source == "idx" && d.data_root.empty()) {
    throw ConfigError("dataset.source=idx needs dataset.data_root");
  }
  if (d.train_per_class < 1 || d.test_per_class < 1) {
    throw ConfigError("dataset per-class sizes must be >= 1");
  }
  if (d.num_classes < 2) throw ConfigError("dataset.num_classes must be >= 2");
  if (d.bag_size < 1) throw ConfigError("dataset.bag_size must be >= 1");
  if (d.bags_per_class < 0) throw ConfigError("dataset.bags_per_class must be >= 0");
  if (d.distractor_fraction < 0.0 || d.distractor_fraction >= 1.0) {
    throw ConfigError("dataset.distractor_fraction must be in [0,1)");
  }
  if (d.noise_sigma < 0.0) throw ConfigError("dataset.noise_sigma must be >= 0");

  if (cfg.vae.epochs < 1) throw ConfigError("vae.epochs must be >= 1");
  if (cfg.vae.batch_size < 1) throw ConfigError("vae.batch_size must be >= 1");
  if (cfg.vae.learning_rate <= 0.0) throw ConfigError("vae.learning_rate must be positive");
  if (cfg.vae.optimizer != "adam" && cfg.vae.optimizer != "sgd_exp_decay") {
    throw ConfigError("vae.optimizer must be 'adam' or 'sgd_exp_decay'");
  }
  if (cfg.vae.checkpoint_every < 0) throw ConfigError("vae.checkpoint_every must be >= 0");

  if (cfg.cluster.k < 1) throw ConfigError("cluster.k must be >= 1");
  if (cfg.cluster.max_iters < 0) throw ConfigError("cluster.max_iters must be >= 0");
  if (cfg.cluster.tol < 0.0) throw ConfigError("cluster.tol must be >= 0");
  if (cfg.cluster.restarts < 1) throw ConfigError("cluster.restarts must be >= 1");

  const auto& c = cfg.classifier;
  if (c.loss != "cce" && c.loss != "cce_plus") {
    throw ConfigError("classifier.loss must be 'cce' or 'cce_plus', got '" + c.loss + "'");
  }
  if (c.alpha < 0.0 || c.alpha > 1.0) throw ConfigError("classifier.alpha must be in [0,1]");
  if (c.epochs < 1) throw ConfigError("classifier.epochs must be >= 1");
  if (c.batch_size < 1) throw ConfigError("classifier.batch_size must be >= 1");
  if (c.learning_rate <= 0.0) throw ConfigError("classifier.learning_rate must be positive");
  if (c.decay_rate <= 0.0) throw ConfigError("classifier.decay_rate must be positive");
  if (c.optimizer != "adam" && c.optimizer != "sgd_exp_decay") {
    throw ConfigError("classifier.optimizer must be 'adam' or 'sgd_exp_decay'");
  }

  for (int n : cfg.sweep.bag_sizes) {
    if (n < 1) throw ConfigError("sweep.bag_sizes entries must be >= 1");
  }
  for (int k : cfg.sweep.ks) {
    if (k < 1) throw ConfigError("sweep.ks entries must be >= 1");
  }
  if (cfg.sweep.alpha_zero_k < 1) throw ConfigError("sweep.alpha_zero_k must be >= 1");
  if (cfg.sweep.alpha_zero_bag_size < 1) {
    throw ConfigError("sweep.alpha_zero_bag_size must be >= 1");
  }
}

std::string ExperimentConfig::canonical() const {
  std::map<std::string, std::string> kv;
  kv["master_seed"] = std::to_string(master_seed);

  kv["dataset.source"] = dataset.source;
  kv["dataset.train_per_class"] = std::to_string(dataset.train_per_class);
  kv["dataset.test_per_class"] = std::to_string(dataset.test_per_class);
  kv["dataset.noise_sigma"] = fmt(dataset.noise_sigma);
  kv["dataset.num_classes"] = std::to_string(dataset.num_classes);
  kv["dataset.bag_size"] = std::to_string(dataset.bag_size);
  kv["dataset.bags_per_class"] = std::to_string(dataset.bags_per_class);
  kv["dataset.distractor_fraction"] = fmt(dataset.distractor_fraction);
  kv["dataset.seed"] = std::to_string(dataset.seed);

  kv["vae.arch"] = vae.arch;
  kv["vae.epochs"] = std::to_string(vae.epochs);
  kv["vae.batch_size"] = std::to_string(vae.batch_size);
  kv["vae.learning_rate"] = fmt(vae.learning_rate);
  kv["vae.optimizer"] = vae.optimizer;
  kv["vae.checkpoint_every"] = std::to_string(vae.checkpoint_every);
  kv["vae.seed"] = std::to_string(vae.seed);

  kv["cluster.k"] = std::to_string(cluster.k);
  kv["cluster.max_iters"] = std::to_string(cluster.max_iters);
  kv["cluster.tol"] = fmt(cluster.tol);
  kv["cluster.restarts"] = std::to_string(cluster.restarts);
  kv["cluster.seed"] = std::to_string(cluster.seed);

  kv["classifier.arch"] = classifier.arch;
  kv["classifier.loss"] = classifier.loss;
  kv["classifier.alpha"] = fmt(classifier.alpha);
  kv["classifier.epochs"] = std::to_string(classifier.epochs);
  kv["classifier.batch_size"] = std::to_string(classifier.batch_size);
  kv["classifier.learning_rate"] = fmt(classifier.learning_rate);
  kv["classifier.decay_rate"] = fmt(classifier.decay_rate);
  kv["classifier.optimizer"] = classifier.optimizer;
  kv["classifier.seed"] = std::to_string(classifier.seed);

  auto join = [](const std::vector<int>& xs) {
    std::string s;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      if (i) s += ",";
      s += std::to_string(xs[i]);
    }
    return s;
  };
  kv["sweep.bag_sizes"] = join(sweep.bag_sizes);
  kv["sweep.ks"] = join(sweep.ks);
  kv["sweep.include_cce"] = sweep.include_cce ? "true" : "false";
  kv["sweep.include_alpha_zero"] = sweep.include_alpha_zero ? "true" : "false";
  kv["sweep.alpha_zero_k"] = std::to_string(sweep.alpha_zero_k);
  kv["sweep.alpha_zero_bag_size"] = std::to_string(sweep.alpha_zero_bag_size);

  std::string out;
  for (const auto& [k, v] : kv) {
    out += k;
    out += "=";
    out += v;
    out += "\n";
  }
  return out;
}

std::uint64_t ExperimentConfig::hash() const { return stable_hash64(canonical()); }

}  // namespace ccep
