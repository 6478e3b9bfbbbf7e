#pragma once

#include <cstdint>
#include <vector>

namespace ccep::eval {

// Fraction of exact matches; throws on empty or mismatched lengths.
double accuracy(const std::vector<int>& predictions, const std::vector<int>& truths);

// confusion[truth][prediction] counts.
std::vector<std::vector<std::int64_t>> confusion_matrix(const std::vector<int>& predictions,
                                                        const std::vector<int>& truths,
                                                        int num_classes);

struct RocPoint {
  double threshold;  // +inf for the (0,0) anchor
  double fpr;
  double tpr;
};

struct RocResult {
  std::vector<RocPoint> points;  // (0,0) .. (1,1), non-decreasing in both axes
  double auc = 0.0;              // trapezoidal area over points
};

// Exact threshold sweep over the distinct score values (ties collapse into one
// step), trapezoidal AUC. truths are 0/1; both classes must be present.
RocResult roc_auc(const std::vector<double>& scores, const std::vector<int>& truths);

}  // namespace ccep::eval
