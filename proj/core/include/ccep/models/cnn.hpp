// cnn.hpp - softmax classifier network.
//
// Table layout for 28x28 digits: conv 64 -> pool -> conv 32 -> pool ->
// dropout(0.2) -> dense 128 -> softmax(10). The stack generalizes to other
// input sizes/channel counts through CnnArch.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ccep/models/net.hpp"

namespace ccep::models {

struct CnnArch {
  std::string name;
  int input_h = 28, input_w = 28, input_c = 1;
  int conv1 = 64, conv2 = 32;
  double dropout = 0.2;
  int dense = 128;
  int num_classes = 10;

  /// "mnist" or "mnist-reduced" (half widths).
  static CnnArch preset(const std::string& name);
};

/// Loss selector for gradient computation. alpha weighs the weak-label term
/// against the cluster-class term.
struct LossSpec {
  enum class Kind { Cce, CcePlus };
  Kind kind = Kind::Cce;
  double alpha = 0.5;
};

struct CnnLoss {
  double total = 0.0;
  double cce_weak = 0.0;     // CCE against weak labels y
  double cce_cluster = 0.0;  // CCE against estimated cluster-classes
};

class CnnModel {
 public:
  CnnModel(const CnnArch& arch, std::uint64_t init_seed);

  const CnnArch& arch() const { return arch_; }

  /// Softmax probabilities, shape (B, num_classes). Eval mode (train_mode
  /// false) disables dropout and is bitwise deterministic.
  Tensor forward(const Tensor& batch, bool train_mode = false,
                 std::uint64_t dropout_seed = 0, std::size_t instance_offset = 0) const;

  /// Loss and parameter gradients. cluster_labels may be empty only for
  /// LossSpec::Kind::Cce.
  CnnLoss loss_and_gradients(const Tensor& batch, const std::vector<int>& weak_labels,
                             const std::vector<int>& cluster_labels, const LossSpec& spec,
                             GradBuffer& grads, bool train_mode = true,
                             std::uint64_t dropout_seed = 0,
                             std::size_t instance_offset = 0) const;

  GradBuffer make_grads() const { return net_.make_grad_buffer(); }
  std::vector<ParamBlock>& params() { return net_.params(); }
  const std::vector<ParamBlock>& params() const { return net_.params(); }
  std::size_t param_count() const { return net_.param_count(); }

 private:
  CnnArch arch_;
  Net net_;
};

}  // namespace ccep::models
