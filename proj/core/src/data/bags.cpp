#include "ccep/data/bags.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "ccep/rng.hpp"

namespace ccep::data {

namespace {

void validate_spec(const BagDatasetSpec& spec) {
  if (spec.bag_size < 1) throw std::invalid_argument("bag_size must be >= 1");
  if (spec.num_classes < 2) throw std::invalid_argument("num_classes must be >= 2");
  if (spec.distractor_fraction < 0.0 || spec.distractor_fraction > 0.5) {
    throw std::invalid_argument("distractor_fraction must be in [0, 0.5]");
  }
}

// Sample `count` distinct indices from pool into out (order of draw).
std::vector<std::size_t> sample_without_replacement(const std::vector<std::size_t>& pool,
                                                    int count, Rng& rng) {
  // Partial Fisher-Yates over a copy; pools here are per-class index lists.
  std::vector<std::size_t> work = pool;
  std::vector<std::size_t> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    std::size_t j = i + rng.uniform_index(work.size() - static_cast<std::size_t>(i));
    std::swap(work[static_cast<std::size_t>(i)], work[j]);
    out.push_back(work[static_cast<std::size_t>(i)]);
  }
  return out;
}

Bag build_bag(const Dataset& instances, const BagDatasetSpec& spec, int bag_label,
              const std::vector<std::vector<std::size_t>>& class_pools,
              const std::vector<std::size_t>& other_pool, Rng& rng) {
  const int matching = matching_count_for(spec);
  const int distractors = spec.bag_size - matching;
  const auto& own_pool = class_pools[static_cast<std::size_t>(bag_label)];
  if (static_cast<int>(own_pool.size()) < matching) {
    throw CapacityError("class " + std::to_string(bag_label) + " has " +
                        std::to_string(own_pool.size()) + " instances but a bag needs " +
                        std::to_string(matching) + " matching ones");
  }
  if (static_cast<int>(other_pool.size()) < distractors) {
    throw CapacityError("not enough non-class-" + std::to_string(bag_label) +
                        " instances for " + std::to_string(distractors) + " distractors");
  }

  Bag bag;
  bag.bag_label = bag_label;
  std::vector<std::size_t> chosen = sample_without_replacement(own_pool, matching, rng);
  // Distractors: uniform over the union of all other-class instances. Those
  // can never match bag_label, so matching_count == matching exactly.
  std::vector<std::size_t> extra = sample_without_replacement(other_pool, distractors, rng);
  chosen.insert(chosen.end(), extra.begin(), extra.end());
  rng.shuffle(chosen);

  bag.instance_ids.reserve(chosen.size());
  for (std::size_t idx : chosen) bag.instance_ids.push_back(instances.instances[idx].id);
  bag.matching_count = matching;
  return bag;
}

}  // namespace

int matching_count_for(const BagDatasetSpec& spec) {
  return static_cast<int>(
      std::ceil(spec.bag_size * (1.0 - spec.distractor_fraction) - 1e-12));
}

std::vector<Bag> make_bags(const Dataset& instances, const BagDatasetSpec& spec) {
  validate_spec(spec);
  if (instances.instances.empty()) throw std::invalid_argument("make_bags: empty instance pool");

  std::vector<std::vector<std::size_t>> class_pools(static_cast<std::size_t>(spec.num_classes));
  for (std::size_t i = 0; i < instances.size(); ++i) {
    int c = instances.instances[i].true_label;
    if (c >= 0 && c < spec.num_classes) class_pools[static_cast<std::size_t>(c)].push_back(i);
  }

  Rng rng(spec.seed);
  std::vector<Bag> bags;
  bags.reserve(static_cast<std::size_t>(spec.num_classes) * spec.num_bags_per_class);
  for (int c = 0; c < spec.num_classes; ++c) {
    std::vector<std::size_t> other_pool;
    for (int o = 0; o < spec.num_classes; ++o) {
      if (o == c) continue;
      const auto& p = class_pools[static_cast<std::size_t>(o)];
      other_pool.insert(other_pool.end(), p.begin(), p.end());
    }
    for (int b = 0; b < spec.num_bags_per_class; ++b) {
      bags.push_back(build_bag(instances, spec, c, class_pools, other_pool, rng));
    }
  }
  return bags;
}

std::vector<Bag> make_bags_for_classes(const Dataset& instances, const BagDatasetSpec& spec,
                                       const std::vector<int>& classes) {
  validate_spec(spec);
  std::vector<std::vector<std::size_t>> class_pools(static_cast<std::size_t>(spec.num_classes));
  for (std::size_t i = 0; i < instances.size(); ++i) {
    int c = instances.instances[i].true_label;
    if (c >= 0 && c < spec.num_classes) class_pools[static_cast<std::size_t>(c)].push_back(i);
  }
  Rng rng(spec.seed);
  std::vector<Bag> bags;
  for (int c : classes) {
    if (c < 0 || c >= spec.num_classes) throw std::invalid_argument("class out of range");
    std::vector<std::size_t> other_pool;
    for (int o = 0; o < spec.num_classes; ++o) {
      if (o == c) continue;
      const auto& p = class_pools[static_cast<std::size_t>(o)];
      other_pool.insert(other_pool.end(), p.begin(), p.end());
    }
    bags.push_back(build_bag(instances, spec, c, class_pools, other_pool, rng));
  }
  return bags;
}

void write_manifest(const std::string& path, const std::vector<Bag>& bags) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error(path + ": cannot open for writing");
  for (const auto& bag : bags) {
    f << bag.bag_label << '\t';
    for (std::size_t i = 0; i < bag.instance_ids.size(); ++i) {
      if (i) f << ',';
      f << bag.instance_ids[i];
    }
    f << '\n';
  }
  if (!f) throw std::runtime_error(path + ": write failed");
}

std::vector<Bag> read_manifest(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error(path + ": cannot open manifest");
  std::vector<Bag> bags;
  std::string lin;
  std::size_t lineno = 0;
  while (std::getline(f, lin)) {
    ++lineno;
    if (lin.empty()) continue;
    auto tab = lin.find('\t');
    if (tab == std::string::npos) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": missing tab separator");
    }
    Bag bag;
    bag.bag_label = std::stoi(lin.substr(0, tab));
    std::stringstream ids(lin.substr(tab + 1));
    std::string id;
    while (std::getline(ids, id, ',')) bag.instance_ids.push_back(id);
    if (bag.instance_ids.empty()) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": bag has no instances");
    }
    bags.push_back(std::move(bag));
  }
  return bags;
}

void write_manifest_meta(const std::string& manifest_path,
                         const std::map<std::string, std::string>& meta) {
  std::ofstream f(manifest_path + ".meta", std::ios::trunc);
  if (!f) throw std::runtime_error(manifest_path + ".meta: cannot open for writing");
  for (const auto& [k, v] : meta) f << k << '=' << v << '\n';
}

std::map<std::string, std::string> read_manifest_meta(const std::string& manifest_path) {
  std::map<std::string, std::string> meta;
  std::ifstream f(manifest_path + ".meta");
  if (!f) return meta;
  std::string lin;
  while (std::getline(f, lin)) {
    auto eq = lin.find('=');
    if (eq != std::string::npos) meta[lin.substr(0, eq)] = lin.substr(eq + 1);
  }
  return meta;
}

std::vector<std::string> unique_instance_ids(const std::vector<Bag>& bags) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto& bag : bags) {
    for (const auto& id : bag.instance_ids) {
      if (seen.insert(id).second) out.push_back(id);
    }
  }
  return out;
}

}  // namespace ccep::data
