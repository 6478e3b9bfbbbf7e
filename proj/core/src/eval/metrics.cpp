#include "ccep/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace ccep::eval {

double accuracy(const std::vector<int>& predictions, const std::vector<int>& truths) {
  if (predictions.size() != truths.size()) {
    throw std::invalid_argument("accuracy: " + std::to_string(predictions.size()) +
                                " predictions vs " + std::to_string(truths.size()) + " truths");
  }
  if (predictions.empty()) throw std::invalid_argument("accuracy: empty input");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    if (predictions[i] == truths[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(predictions.size());
}

std::vector<std::vector<std::int64_t>> confusion_matrix(const std::vector<int>& predictions,
                                                        const std::vector<int>& truths,
                                                        int num_classes) {
  if (predictions.size() != truths.size()) {
    throw std::invalid_argument("confusion_matrix: length mismatch");
  }
  std::vector<std::vector<std::int64_t>> m(num_classes,
                                           std::vector<std::int64_t>(num_classes, 0));
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const int t = truths[i];
    const int p = predictions[i];
    if (t < 0 || t >= num_classes || p < 0 || p >= num_classes) {
      throw std::out_of_range("confusion_matrix: label outside [0, " +
                              std::to_string(num_classes) + ") at row " + std::to_string(i));
    }
    ++m[t][p];
  }
  return m;
}

RocResult roc_auc(const std::vector<double>& scores, const std::vector<int>& truths) {
  if (scores.size() != truths.size()) {
    throw std::invalid_argument("roc_auc: length mismatch");
  }
  if (scores.empty()) throw std::invalid_argument("roc_auc: empty input");
  std::size_t pos = 0, neg = 0;
  for (std::size_t i = 0; i < truths.size(); ++i) {
    if (truths[i] == 1) {
      ++pos;
    } else if (truths[i] == 0) {
      ++neg;
    } else {
      throw std::invalid_argument("roc_auc: labels must be 0 or 1");
    }
    if (!std::isfinite(scores[i])) throw std::invalid_argument("roc_auc: non-finite score");
  }
  if (pos == 0 || neg == 0) {
    throw std::invalid_argument("roc_auc: need at least one positive and one negative");
  }

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  RocResult res;
  res.points.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
  std::size_t tp = 0, fp = 0;
  double auc2 = 0.0;  // twice the area, accumulated in counts
  std::size_t i = 0;
  while (i < order.size()) {
    const double s = scores[order[i]];
    std::size_t dtp = 0, dfp = 0;
    while (i < order.size() && scores[order[i]] == s) {
      if (truths[order[i]] == 1) {
        ++dtp;
      } else {
        ++dfp;
      }
      ++i;
    }
    // trapezoid over the tie group: width dfp, heights tp and tp+dtp
    auc2 += static_cast<double>(dfp) * static_cast<double>(2 * tp + dtp);
    tp += dtp;
    fp += dfp;
    res.points.push_back({s, static_cast<double>(fp) / static_cast<double>(neg),
                          static_cast<double>(tp) / static_cast<double>(pos)});
  }
  res.auc = auc2 / (2.0 * static_cast<double>(pos) * static_cast<double>(neg));
  return res;
}

}  // namespace ccep::eval
