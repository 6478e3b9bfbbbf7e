#pragma once

#include <string>
#include <vector>

#include "ccep/data/dataset.hpp"
#include "ccep/models/vae.hpp"

namespace ccep::eval {

struct LatentRow {
  std::string id;
  int weak_label = -1;  // -1 when no bag assignment is known
  int true_label = -1;
  std::vector<double> z;  // deterministic encoding (sample = mean)
};

// Deterministic (mean) encodings of every instance in the pool, in pool order.
std::vector<LatentRow> encode_pool(const models::VaeModel& model, const data::Dataset& pool,
                                   int batch_size = 256);

// CSV: id,weak_label,true_label,z0..z{D-1} after a "# config <hash>" comment;
// coordinates at full double precision so a parse reproduces them exactly.
void write_latents_csv(const std::string& path, const std::vector<LatentRow>& rows,
                       std::uint64_t config_hash = 0);

}  // namespace ccep::eval
