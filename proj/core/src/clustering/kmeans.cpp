#include "ccep/clustering/kmeans.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "ccep/rng.hpp"

namespace ccep::clustering {

namespace {

double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

int nearest_index(const std::vector<std::vector<double>>& centroids,
                  const std::vector<double>& p, double* best_d2 = nullptr) {
  int best = 0;
  double bd = sq_dist(p, centroids[0]);
  for (std::size_t j = 1; j < centroids.size(); ++j) {
    const double d = sq_dist(p, centroids[j]);
    if (d < bd) {
      bd = d;
      best = static_cast<int>(j);
    }
  }
  if (best_d2) *best_d2 = bd;
  return best;
}

std::vector<std::vector<double>> seed_kmeanspp(const std::vector<LabeledPoint>& points, int k,
                                               Rng& rng) {
  const std::size_t n = points.size();
  std::vector<std::vector<double>> centroids;
  centroids.reserve(k);
  centroids.push_back(points[rng.uniform_index(n)].feature);
  std::vector<double> d2(n);
  while (static_cast<int>(centroids.size()) < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double d = sq_dist(points[i].feature, centroids[0]);
      for (std::size_t j = 1; j < centroids.size(); ++j) {
        d = std::min(d, sq_dist(points[i].feature, centroids[j]));
      }
      d2[i] = d;
      total += d;
    }
    std::size_t pick;
    if (total <= 0.0) {
      pick = rng.uniform_index(n);  // every point already covered
    } else {
      const double r = rng.uniform() * total;
      double cum = 0.0;
      pick = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        cum += d2[i];
        if (cum > r) {
          pick = i;
          break;
        }
      }
    }
    centroids.push_back(points[pick].feature);
  }
  return centroids;
}

ClusterModel fit_once(const std::vector<LabeledPoint>& points, int k, std::uint64_t seed,
                      int max_iters, double tol) {
  const std::size_t n = points.size();
  const int dim = static_cast<int>(points[0].feature.size());
  Rng rng(seed);

  ClusterModel model;
  model.k = k;
  model.dim = dim;
  model.seed = seed;
  model.centroids = seed_kmeanspp(points, k, rng);

  std::vector<int> assign(n, 0);
  std::vector<double> d2(n, 0.0);
  for (int it = 0; it < max_iters; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      assign[i] = nearest_index(model.centroids, points[i].feature, &d2[i]);
    }

    std::vector<std::vector<double>> next(k, std::vector<double>(dim, 0.0));
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      auto& c = next[assign[i]];
      const auto& p = points[i].feature;
      for (int d = 0; d < dim; ++d) c[d] += p[d];
      ++counts[assign[i]];
    }
    std::vector<double> reseed_d2 = d2;  // consumed as empty clusters grab points
    for (int j = 0; j < k; ++j) {
      if (counts[j] > 0) {
        for (int d = 0; d < dim; ++d) next[j][d] /= counts[j];
      } else {
        std::size_t far = 0;
        for (std::size_t i = 1; i < n; ++i) {
          if (reseed_d2[i] > reseed_d2[far]) far = i;
        }
        next[j] = points[far].feature;
        reseed_d2[far] = -1.0;
      }
    }

    double shift = 0.0;
    for (int j = 0; j < k; ++j) {
      shift = std::max(shift, std::sqrt(sq_dist(model.centroids[j], next[j])));
    }
    model.centroids = std::move(next);
    model.iterations = it + 1;
    if (shift < tol) break;
  }

  model.inertia = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double best;
    nearest_index(model.centroids, points[i].feature, &best);
    model.inertia += best;
  }
  return model;
}

}  // namespace

ClusterModel kmeans_fit(const std::vector<LabeledPoint>& points, int k, std::uint64_t seed,
                        int max_iters, double tol, int restarts) {
  if (k < 1) throw std::invalid_argument("kmeans_fit: k must be >= 1");
  if (points.size() < static_cast<std::size_t>(k)) {
    throw CapacityError("kmeans_fit: " + std::to_string(points.size()) + " points cannot fill " +
                        std::to_string(k) + " clusters");
  }
  if (restarts < 1) throw std::invalid_argument("kmeans_fit: restarts must be >= 1");
  for (const auto& p : points) {
    if (p.feature.size() != points[0].feature.size()) {
      throw std::invalid_argument("kmeans_fit: inconsistent feature dimensions");
    }
  }

  ClusterModel best;
  for (int r = 0; r < restarts; ++r) {
    const std::uint64_t run_seed =
        restarts == 1 ? seed : derive_seed(seed, "restart:" + std::to_string(r));
    ClusterModel m = fit_once(points, k, run_seed, max_iters, tol);
    if (r == 0 || m.inertia < best.inertia) best = std::move(m);
  }
  return best;
}

ClusterModel vote_cluster_classes(ClusterModel model, const std::vector<LabeledPoint>& points) {
  int num_classes = 0;
  for (const auto& p : points) num_classes = std::max(num_classes, p.weak_label + 1);
  if (num_classes == 0) throw std::invalid_argument("vote_cluster_classes: no labeled points");

  std::vector<std::vector<std::size_t>> counts(model.k, std::vector<std::size_t>(num_classes, 0));
  std::vector<std::size_t> global(num_classes, 0);
  for (const auto& p : points) {
    const int j = nearest_centroid(model, p.feature);
    ++counts[j][p.weak_label];
    ++global[p.weak_label];
  }

  auto majority = [](const std::vector<std::size_t>& c) {
    int best = 0;
    for (int y = 1; y < static_cast<int>(c.size()); ++y) {
      if (c[y] > c[best]) best = y;  // ties keep the lowest class index
    }
    return best;
  };

  const int global_major = majority(global);
  model.cluster_classes.assign(model.k, global_major);
  for (int j = 0; j < model.k; ++j) {
    std::size_t members = 0;
    for (auto c : counts[j]) members += c;
    if (members > 0) model.cluster_classes[j] = majority(counts[j]);
  }
  return model;
}

int nearest_centroid(const ClusterModel& model, const std::vector<double>& feature) {
  if (static_cast<int>(feature.size()) != model.dim) {
    throw std::invalid_argument("nearest_centroid: feature has dimension " +
                                std::to_string(feature.size()) + ", model expects " +
                                std::to_string(model.dim));
  }
  return nearest_index(model.centroids, feature);
}

int estimate_label(const ClusterModel& model, const std::vector<double>& feature) {
  if (model.cluster_classes.empty()) {
    throw std::logic_error("estimate_label: cluster classes have not been voted");
  }
  return model.cluster_classes[nearest_centroid(model, feature)];
}

std::vector<Assignment> assign_all(const ClusterModel& model,
                                   const std::vector<std::vector<double>>& features) {
  std::vector<Assignment> out;
  out.reserve(features.size());
  for (const auto& f : features) {
    Assignment a;
    a.cluster = nearest_centroid(model, f);
    a.label = model.cluster_classes.empty() ? -1 : model.cluster_classes[a.cluster];
    out.push_back(a);
  }
  return out;
}

namespace {

std::string fmt_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

}  // namespace

void write_cluster_model(const std::string& path, const ClusterModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << "ccep-cluster-model 1\n";
  out << "config " << model.config_hash << "\n";
  out << "k " << model.k << "\n";
  out << "dim " << model.dim << "\n";
  out << "seed " << model.seed << "\n";
  out << "iterations " << model.iterations << "\n";
  out << "inertia " << fmt_double(model.inertia) << "\n";
  for (const auto& c : model.centroids) {
    out << "centroid";
    for (double x : c) out << " " << fmt_double(x);
    out << "\n";
  }
  out << "classes";
  if (model.cluster_classes.empty()) {
    out << " -";
  } else {
    for (int y : model.cluster_classes) out << " " << y;
  }
  out << "\n";
  if (!out) throw std::runtime_error("failed writing " + path);
}

ClusterModel read_cluster_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  auto bad = [&](const std::string& why) {
    return std::runtime_error("cluster model file " + path + ": " + why);
  };
  std::string line;
  if (!std::getline(in, line) || line != "ccep-cluster-model 1") throw bad("bad header");

  ClusterModel model;
  auto expect_kv = [&](const std::string& key) {
    if (!std::getline(in, line)) throw bad("truncated before " + key);
    std::istringstream is(line);
    std::string k;
    is >> k;
    if (k != key) throw bad("expected '" + key + "', got '" + k + "'");
    return is;
  };
  { auto is = expect_kv("config"); if (!(is >> model.config_hash)) throw bad("bad config"); }
  { auto is = expect_kv("k"); if (!(is >> model.k)) throw bad("bad k"); }
  { auto is = expect_kv("dim"); if (!(is >> model.dim)) throw bad("bad dim"); }
  { auto is = expect_kv("seed"); if (!(is >> model.seed)) throw bad("bad seed"); }
  { auto is = expect_kv("iterations"); if (!(is >> model.iterations)) throw bad("bad iterations"); }
  { auto is = expect_kv("inertia"); if (!(is >> model.inertia)) throw bad("bad inertia"); }
  if (model.k < 1 || model.dim < 1) throw bad("non-positive k or dim");

  model.centroids.resize(model.k);
  for (int j = 0; j < model.k; ++j) {
    auto is = expect_kv("centroid");
    model.centroids[j].resize(model.dim);
    for (int d = 0; d < model.dim; ++d) {
      if (!(is >> model.centroids[j][d])) throw bad("short centroid row");
    }
  }
  {
    auto is = expect_kv("classes");
    std::string tok;
    if (!(is >> tok)) throw bad("missing classes");
    if (tok != "-") {
      model.cluster_classes.push_back(std::stoi(tok));
      int y;
      while (is >> y) model.cluster_classes.push_back(y);
      if (static_cast<int>(model.cluster_classes.size()) != model.k) {
        throw bad("classes row does not match k");
      }
    }
  }
  return model;
}

void write_yhat_cache(const std::string& path, const std::vector<YhatEntry>& entries,
                      std::uint64_t config_hash) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << "# config " << config_hash << "\n";
  for (const auto& e : entries) out << e.id << "\t" << e.cluster << "\t" << e.yhat << "\n";
  if (!out) throw std::runtime_error("failed writing " + path);
}

std::vector<YhatEntry> read_yhat_cache(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<YhatEntry> entries;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line.front() == '#') continue;
    const auto t1 = line.find('\t');
    const auto t2 = line.find('\t', t1 == std::string::npos ? t1 : t1 + 1);
    if (t1 == std::string::npos || t2 == std::string::npos) {
      throw std::runtime_error("malformed line in " + path + ": " + line);
    }
    YhatEntry e;
    e.id = line.substr(0, t1);
    e.cluster = std::stoi(line.substr(t1 + 1, t2 - t1 - 1));
    e.yhat = std::stoi(line.substr(t2 + 1));
    entries.push_back(std::move(e));
  }
  return entries;
}

}  // namespace ccep::clustering
