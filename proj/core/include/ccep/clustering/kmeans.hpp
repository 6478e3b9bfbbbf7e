#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace ccep::clustering {

struct LabeledPoint {
  std::vector<double> feature;
  int weak_label = -1;
};

struct ClusterModel {
  int k = 0;
  int dim = 0;
  std::vector<std::vector<double>> centroids;  // k rows of dim coordinates
  std::vector<int> cluster_classes;            // empty until vote_cluster_classes
  double inertia = 0.0;
  std::uint64_t seed = 0;
  int iterations = 0;
  std::uint64_t config_hash = 0;  // producing run's config fingerprint
};

struct CapacityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Lloyd's algorithm with k-means++ seeding. Stops when the maximum centroid
// displacement drops below tol or after max_iters sweeps. A cluster that loses
// all members is reseeded to the point farthest from its assigned centroid.
// With restarts > 1 the fit is repeated on derived seeds and the lowest-inertia
// model wins (ties keep the earliest restart).
ClusterModel kmeans_fit(const std::vector<LabeledPoint>& points, int k, std::uint64_t seed,
                        int max_iters = 300, double tol = 1e-4, int restarts = 1);

// Majority vote of member weak labels per cluster; ties go to the lowest class
// index and memberless clusters take the global majority label.
ClusterModel vote_cluster_classes(ClusterModel model, const std::vector<LabeledPoint>& points);

// Index of the nearest centroid by Euclidean distance; ties go to the lowest
// centroid index.
int nearest_centroid(const ClusterModel& model, const std::vector<double>& feature);

// cluster_classes[nearest_centroid(feature)].
int estimate_label(const ClusterModel& model, const std::vector<double>& feature);

struct Assignment {
  int cluster = -1;
  int label = -1;
};

std::vector<Assignment> assign_all(const ClusterModel& model,
                                   const std::vector<std::vector<double>>& features);

// Structured-text model file: header, fitting metadata, one row per centroid,
// one row of class labels ("-" when voting has not run). Round-trips exactly.
void write_cluster_model(const std::string& path, const ClusterModel& model);
ClusterModel read_cluster_model(const std::string& path);

// Per-instance cache of precomputed cluster assignments and estimated labels,
// one "id<TAB>cluster<TAB>label" line per instance after a "# config <hash>"
// header comment.
struct YhatEntry {
  std::string id;
  int cluster = -1;
  int yhat = -1;
};

void write_yhat_cache(const std::string& path, const std::vector<YhatEntry>& entries,
                      std::uint64_t config_hash = 0);
std::vector<YhatEntry> read_yhat_cache(const std::string& path);

}  // namespace ccep::clustering
