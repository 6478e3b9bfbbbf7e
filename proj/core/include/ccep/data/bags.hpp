// bags.hpp - weakly labeled bag synthesis and the manifest interchange file.
//
// A bag is N instance ids with one bag-level label. Every generated bag has
// exactly ceil(N*(1-distractor_fraction)) instances whose true class equals
// the bag label; the rest are drawn uniformly from the other classes. Every
// instance in a bag trains under the bag label as its weak label.

#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "ccep/data/dataset.hpp"

namespace ccep::data {

struct Bag {
  std::vector<std::string> instance_ids;  // length N, shuffled
  int bag_label = -1;
  int matching_count = 0;  // instances whose true label equals bag_label
};

struct BagDatasetSpec {
  int bag_size = 10;                  // N
  int num_bags_per_class = 100;
  double distractor_fraction = 0.5;   // <= 0.5 so the majority constraint holds
  int num_classes = 10;
  std::uint64_t seed = 1;
};

struct CapacityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Number of label-matching instances per bag for a spec.
int matching_count_for(const BagDatasetSpec& spec);

/// Deterministic bag synthesis. Instances are sampled without replacement
/// within a bag and with replacement across bags. Throws CapacityError when
/// a class pool cannot supply one bag's matching instances.
std::vector<Bag> make_bags(const Dataset& instances, const BagDatasetSpec& spec);

/// Bags built only from the listed classes, in that order (one bag each).
/// Used by the sample-sheet renderer.
std::vector<Bag> make_bags_for_classes(const Dataset& instances, const BagDatasetSpec& spec,
                                       const std::vector<int>& classes);

// --- manifest -------------------------------------------------------------
// One bag per line: "<bag_label>\t<id>,<id>,...". Nothing else in the file;
// run metadata lives in a "<path>.meta" sidecar.

void write_manifest(const std::string& path, const std::vector<Bag>& bags);
std::vector<Bag> read_manifest(const std::string& path);

/// key=value sidecar next to a manifest (config hash, N, counts...).
void write_manifest_meta(const std::string& manifest_path,
                         const std::map<std::string, std::string>& meta);
std::map<std::string, std::string> read_manifest_meta(const std::string& manifest_path);

/// Distinct instance ids across bags, in first-appearance order.
std::vector<std::string> unique_instance_ids(const std::vector<Bag>& bags);

}  // namespace ccep::data
