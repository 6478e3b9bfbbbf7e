#include "ccep/losses/cross_entropy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace ccep::losses {

double cce(const std::vector<int>& labels, const Tensor& probs) {
  if (probs.shape.size() != 2) {
    throw ShapeError("cce", "(B, C)", shape_str(probs.shape));
  }
  const int B = probs.shape[0];
  const int C = probs.shape[1];
  if (static_cast<int>(labels.size()) != B) {
    throw std::invalid_argument("cce: expected " + std::to_string(B) + " labels, got " +
                                std::to_string(labels.size()));
  }
  if (B == 0) throw std::invalid_argument("cce: empty batch");
  double total = 0.0;
  for (int n = 0; n < B; ++n) {
    const int y = labels[static_cast<std::size_t>(n)];
    if (y < 0 || y >= C) {
      throw std::out_of_range("cce: label " + std::to_string(y) + " outside [0, " +
                              std::to_string(C) + ") at row " + std::to_string(n));
    }
    const double p = std::clamp(probs.at2(n, y), kProbClamp, 1.0 - kProbClamp);
    total -= std::log(p);
  }
  return total / B;
}

double cce_plus(const std::vector<int>& weak_labels, const std::vector<int>& cluster_labels,
                const Tensor& probs, double alpha) {
  if (alpha < 0.0 || alpha > 1.0) {
    throw std::invalid_argument("cce_plus: alpha must be in [0,1], got " + std::to_string(alpha));
  }
  return alpha * cce(weak_labels, probs) + (1.0 - alpha) * cce(cluster_labels, probs);
}

}  // namespace ccep::losses
