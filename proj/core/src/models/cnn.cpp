#include "ccep/models/cnn.hpp"

#include <cmath>
#include <stdexcept>

#include "ccep/losses/cross_entropy.hpp"

namespace ccep::models {

CnnArch CnnArch::preset(const std::string& name) {
  CnnArch a;
  a.name = name;
  if (name == "mnist") {
    a.conv1 = 64;
    a.conv2 = 32;
    a.dense = 128;
  } else if (name == "mnist-reduced") {
    a.conv1 = 32;
    a.conv2 = 16;
    a.dense = 64;
  } else {
    throw std::invalid_argument("unknown CNN preset: " + name);
  }
  return a;
}

namespace {

Net build_cnn(const CnnArch& a) {
  std::vector<LayerSpec> layers = {
      LayerSpec::conv(a.conv1),
      LayerSpec::relu(),
      LayerSpec::maxpool(),
      LayerSpec::conv(a.conv2),
      LayerSpec::relu(),
      LayerSpec::maxpool(),
      LayerSpec::flatten(),
      LayerSpec::dropout(a.dropout),
      LayerSpec::dense(a.dense),
      LayerSpec::relu(),
      LayerSpec::dense(a.num_classes),  // logits; softmax applied by callers
  };
  return Net("cnn", {a.input_h, a.input_w, a.input_c}, std::move(layers));
}

}  // namespace

CnnModel::CnnModel(const CnnArch& arch, std::uint64_t init_seed)
    : arch_(arch), net_(build_cnn(arch)) {
  Rng rng(init_seed);
  net_.init_params(rng);
}

Tensor CnnModel::forward(const Tensor& batch, bool train_mode, std::uint64_t dropout_seed,
                         std::size_t instance_offset) const {
  ForwardCtx ctx;
  const Tensor& logits = net_.forward(batch, ctx, train_mode, dropout_seed, instance_offset);
  return softmax_rows(logits);
}

CnnLoss CnnModel::loss_and_gradients(const Tensor& batch, const std::vector<int>& weak_labels,
                                     const std::vector<int>& cluster_labels,
                                     const LossSpec& spec, GradBuffer& grads, bool train_mode,
                                     std::uint64_t dropout_seed,
                                     std::size_t instance_offset) const {
  const int B = batch.shape.empty() ? 0 : batch.shape[0];
  const int C = arch_.num_classes;
  if (static_cast<int>(weak_labels.size()) != B) {
    throw std::invalid_argument("cnn: weak label count does not match batch size");
  }
  const bool use_cluster = spec.kind == LossSpec::Kind::CcePlus;
  if (use_cluster && static_cast<int>(cluster_labels.size()) != B) {
    throw std::invalid_argument("cnn: cluster-class labels required for the mixed loss");
  }
  if (use_cluster && (spec.alpha < 0.0 || spec.alpha > 1.0)) {
    throw std::invalid_argument("cnn: alpha must be in [0,1]");
  }

  ForwardCtx ctx;
  const Tensor& logits = net_.forward(batch, ctx, train_mode, dropout_seed, instance_offset);
  Tensor probs = softmax_rows(logits);

  CnnLoss out;
  out.cce_weak = losses::cce(weak_labels, probs);
  if (use_cluster) {
    out.cce_cluster = losses::cce(cluster_labels, probs);
    out.total = spec.alpha * out.cce_weak + (1.0 - spec.alpha) * out.cce_cluster;
  } else {
    out.total = out.cce_weak;
  }
  if (!std::isfinite(out.total)) throw NumericError("cnn: non-finite loss");

  // d(batch-mean CCE)/dlogits = (p - onehot(target)) / B; the mixed loss is
  // the alpha-blend of the two one-hot targets.
  Tensor dlogits(probs.shape);
  const double invB = 1.0 / B;
  const double wy = use_cluster ? spec.alpha : 1.0;
  const double wc = use_cluster ? 1.0 - spec.alpha : 0.0;
  for (int n = 0; n < B; ++n) {
    for (int c = 0; c < C; ++c) {
      double g = probs.at2(n, c);
      double target = 0.0;
      if (weak_labels[static_cast<std::size_t>(n)] == c) target += wy;
      if (use_cluster && cluster_labels[static_cast<std::size_t>(n)] == c) target += wc;
      dlogits.at2(n, c) = (g * (wy + wc) - target) * invB;
    }
  }
  net_.backward(dlogits, ctx, grads);
  return out;
}

}  // namespace ccep::models
