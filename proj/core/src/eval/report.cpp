#include "ccep/eval/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace ccep::eval {

namespace {

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

}  // namespace

EvalReport evaluate_model(const models::CnnModel& model, const data::Dataset& test_set,
                          std::uint64_t config_hash, int batch_size) {
  const std::size_t n = test_set.instances.size();
  if (n == 0) throw std::invalid_argument("evaluate_model: empty test set");
  const int C = model.arch().num_classes;
  const auto bs = static_cast<std::size_t>(std::max(1, batch_size));

  std::vector<int> preds(n), truths(n);
  std::vector<std::vector<double>> scores(C, std::vector<double>(n));
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < n; start += bs) {
    const std::size_t stop = std::min(start + bs, n);
    idx.clear();
    for (std::size_t i = start; i < stop; ++i) idx.push_back(i);
    Tensor batch = data::stack_batch(test_set, idx);
    Tensor probs = model.forward(batch);
    for (std::size_t i = 0; i < idx.size(); ++i) {
      int best = 0;
      for (int c = 0; c < C; ++c) {
        const double p = probs.at2(static_cast<int>(i), c);
        scores[c][idx[i]] = p;
        if (p > probs.at2(static_cast<int>(i), best)) best = c;
      }
      preds[idx[i]] = best;
      truths[idx[i]] = test_set.instances[idx[i]].true_label;
    }
  }

  EvalReport rep;
  rep.config_hash = config_hash;
  rep.count = n;
  rep.num_classes = C;
  rep.accuracy = accuracy(preds, truths);
  rep.confusion = confusion_matrix(preds, truths, C);

  rep.per_class_auc.assign(C, std::numeric_limits<double>::quiet_NaN());
  rep.per_class_roc.resize(C);
  double auc_sum = 0.0;
  int auc_n = 0;
  std::vector<int> binary(n);
  for (int c = 0; c < C; ++c) {
    for (std::size_t i = 0; i < n; ++i) binary[i] = truths[i] == c ? 1 : 0;
    try {
      rep.per_class_roc[c] = roc_auc(scores[c], binary);
      rep.per_class_auc[c] = rep.per_class_roc[c].auc;
      auc_sum += rep.per_class_auc[c];
      ++auc_n;
    } catch (const std::invalid_argument&) {
      // class absent from the test set; no curve
    }
  }
  rep.macro_auc = auc_n > 0 ? auc_sum / auc_n : std::numeric_limits<double>::quiet_NaN();
  return rep;
}

void write_report(const std::string& path, const EvalReport& report) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  char hex[20];
  std::snprintf(hex, sizeof(hex), "%016llx",
                static_cast<unsigned long long>(report.config_hash));
  out << "config " << hex << "\n";
  out << "count " << report.count << "\n";
  out << "num_classes " << report.num_classes << "\n";
  out << "accuracy " << fmt(report.accuracy) << "\n";
  out << "macro_auc " << fmt(report.macro_auc) << "\n";
  for (int c = 0; c < report.num_classes; ++c) {
    out << "auc_class_" << c << " ";
    if (std::isnan(report.per_class_auc[c])) {
      out << "-";
    } else {
      out << fmt(report.per_class_auc[c]);
    }
    out << "\n";
  }
  out << "confusion_rows_truth_cols_prediction\n";
  for (const auto& row : report.confusion) {
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j) out << "\t";
      out << row[j];
    }
    out << "\n";
  }
  if (!out) throw std::runtime_error("failed writing " + path);
}

void write_roc_csv(const std::string& path, const EvalReport& report) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  char hex[20];
  std::snprintf(hex, sizeof(hex), "%016llx",
                static_cast<unsigned long long>(report.config_hash));
  out << "# config " << hex << "\n";
  out << "class,threshold,fpr,tpr\n";
  for (int c = 0; c < report.num_classes; ++c) {
    if (std::isnan(report.per_class_auc[c])) continue;
    for (const auto& pt : report.per_class_roc[c].points) {
      out << c << ",";
      if (std::isinf(pt.threshold)) {
        out << "inf";
      } else {
        out << fmt(pt.threshold);
      }
      out << "," << fmt(pt.fpr) << "," << fmt(pt.tpr) << "\n";
    }
  }
  if (!out) throw std::runtime_error("failed writing " + path);
}

}  // namespace ccep::eval
