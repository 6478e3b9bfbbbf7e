#include "ccep/eval/latents.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace ccep::eval {

std::vector<LatentRow> encode_pool(const models::VaeModel& model, const data::Dataset& pool,
                                   int batch_size) {
  const std::size_t n = pool.instances.size();
  const auto bs = static_cast<std::size_t>(std::max(1, batch_size));
  std::vector<LatentRow> rows;
  rows.reserve(n);
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < n; start += bs) {
    const std::size_t stop = std::min(start + bs, n);
    idx.clear();
    for (std::size_t i = start; i < stop; ++i) idx.push_back(i);
    Tensor batch = data::stack_batch(pool, idx);
    auto codes = model.encode(batch, 0, /*stochastic=*/false);
    for (std::size_t i = 0; i < idx.size(); ++i) {
      LatentRow r;
      r.id = pool.instances[idx[i]].id;
      r.true_label = pool.instances[idx[i]].true_label;
      r.z = codes[i].mean;
      rows.push_back(std::move(r));
    }
  }
  return rows;
}

void write_latents_csv(const std::string& path, const std::vector<LatentRow>& rows,
                       std::uint64_t config_hash) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  const std::size_t dim = rows.empty() ? 0 : rows[0].z.size();
  char hex[20];
  std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(config_hash));
  out << "# config " << hex << "\n";
  out << "id,weak_label,true_label";
  for (std::size_t d = 0; d < dim; ++d) out << ",z" << d;
  out << "\n";
  char buf[40];
  for (const auto& r : rows) {
    out << r.id << "," << r.weak_label << "," << r.true_label;
    for (double x : r.z) {
      std::snprintf(buf, sizeof(buf), "%.17g", x);
      out << "," << buf;
    }
    out << "\n";
  }
  if (!out) throw std::runtime_error("failed writing " + path);
}

}  // namespace ccep::eval
