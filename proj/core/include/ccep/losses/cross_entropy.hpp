#pragma once

#include <vector>

#include "ccep/tensor.hpp"

namespace ccep::losses {

// Batch-mean categorical cross entropy over a (B, C) row of class
// probabilities. Probabilities are clamped to [1e-7, 1 - 1e-7] before the log.
double cce(const std::vector<int>& labels, const Tensor& probs);

// alpha * cce(weak) + (1 - alpha) * cce(cluster), the mixed training loss.
double cce_plus(const std::vector<int>& weak_labels, const std::vector<int>& cluster_labels,
                const Tensor& probs, double alpha);

constexpr double kProbClamp = 1e-7;

}  // namespace ccep::losses
