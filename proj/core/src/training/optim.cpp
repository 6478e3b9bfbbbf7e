#include "ccep/training/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace ccep::training {

namespace {

constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

void check_aligned(const OptimizerState& state, const std::vector<models::ParamBlock*>& params,
                   const std::vector<const Tensor*>& grads, bool need_moments) {
  if (params.size() != grads.size()) {
    throw std::invalid_argument("optimizer: param/grad list size mismatch");
  }
  if (need_moments && state.m.size() != params.size()) {
    throw std::invalid_argument("optimizer: moment buffers not aligned with params");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i]->w.numel() != grads[i]->numel()) {
      throw std::invalid_argument("optimizer: gradient shape mismatch for " + params[i]->name);
    }
    if (!grads[i]->all_finite()) {
      throw NumericError("optimizer: non-finite gradient in " + params[i]->name);
    }
  }
}

}  // namespace

OptimizerState OptimizerState::adam(double lr,
                                    const std::vector<const models::ParamBlock*>& params) {
  if (lr <= 0.0) throw std::invalid_argument("adam: learning rate must be positive");
  OptimizerState st;
  st.kind = OptimizerKind::Adam;
  st.learning_rate = lr;
  st.m.reserve(params.size());
  st.v.reserve(params.size());
  for (const auto* p : params) {
    st.m.emplace_back(p->w.shape);
    st.v.emplace_back(p->w.shape);
  }
  return st;
}

OptimizerState OptimizerState::sgd_exp_decay(double lr, double decay_rate,
                                             std::int64_t decay_steps) {
  if (lr <= 0.0) throw std::invalid_argument("sgd: learning rate must be positive");
  if (decay_rate <= 0.0) throw std::invalid_argument("sgd: decay rate must be positive");
  if (decay_steps < 1) throw std::invalid_argument("sgd: decay steps must be >= 1");
  OptimizerState st;
  st.kind = OptimizerKind::SgdExpDecay;
  st.learning_rate = lr;
  st.decay_rate = decay_rate;
  st.decay_steps = decay_steps;
  return st;
}

double OptimizerState::effective_lr() const {
  if (kind == OptimizerKind::Adam) return learning_rate;
  return learning_rate *
         std::pow(decay_rate, static_cast<double>(step_count) / static_cast<double>(decay_steps));
}

void adam_step(OptimizerState& state, const std::vector<models::ParamBlock*>& params,
               const std::vector<const Tensor*>& grads) {
  if (state.kind != OptimizerKind::Adam) throw std::logic_error("adam_step on non-Adam state");
  check_aligned(state, params, grads, true);
  const double t = static_cast<double>(state.step_count + 1);
  const double bc1 = 1.0 - std::pow(kBeta1, t);
  const double bc2 = 1.0 - std::pow(kBeta2, t);
  const double lr = state.learning_rate;
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& w = params[i]->w.v;
    const auto& g = grads[i]->v;
    auto& m = state.m[i].v;
    auto& v = state.v[i].v;
    for (std::size_t j = 0; j < w.size(); ++j) {
      m[j] = kBeta1 * m[j] + (1.0 - kBeta1) * g[j];
      v[j] = kBeta2 * v[j] + (1.0 - kBeta2) * g[j] * g[j];
      const double mhat = m[j] / bc1;
      const double vhat = v[j] / bc2;
      w[j] -= lr * mhat / (std::sqrt(vhat) + kAdamEps);
    }
  }
  ++state.step_count;
}

void sgd_exp_decay_step(OptimizerState& state, const std::vector<models::ParamBlock*>& params,
                        const std::vector<const Tensor*>& grads) {
  if (state.kind != OptimizerKind::SgdExpDecay) {
    throw std::logic_error("sgd_exp_decay_step on non-SGD state");
  }
  check_aligned(state, params, grads, false);
  const double lr = state.effective_lr();
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& w = params[i]->w.v;
    const auto& g = grads[i]->v;
    for (std::size_t j = 0; j < w.size(); ++j) w[j] -= lr * g[j];
  }
  ++state.step_count;
}

void optimizer_step(OptimizerState& state, const std::vector<models::ParamBlock*>& params,
                    const std::vector<const Tensor*>& grads) {
  if (state.kind == OptimizerKind::Adam) {
    adam_step(state, params, grads);
  } else {
    sgd_exp_decay_step(state, params, grads);
  }
}

double clip_global_norm(const std::vector<Tensor*>& grads, double max_norm) {
  double sq = 0.0;
  for (const auto* g : grads) {
    for (double x : g->v) sq += x * x;
  }
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const double scale = max_norm / norm;
    for (auto* g : grads) {
      for (double& x : g->v) x *= scale;
    }
  }
  return norm;
}

}  // namespace ccep::training
