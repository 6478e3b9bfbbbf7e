#pragma once

#include <cstdint>
#include <vector>

#include "ccep/models/net.hpp"
#include "ccep/tensor.hpp"

namespace ccep::training {

enum class OptimizerKind { Adam, SgdExpDecay };

struct OptimizerState {
  OptimizerKind kind = OptimizerKind::Adam;
  double learning_rate = 0.001;
  double decay_rate = 0.95;      // SgdExpDecay only
  std::int64_t decay_steps = 1;  // steps per decay_rate application
  std::int64_t step_count = 0;
  std::vector<Tensor> m;  // Adam first moments, aligned with the param list
  std::vector<Tensor> v;  // Adam second moments

  static OptimizerState adam(double lr, const std::vector<const models::ParamBlock*>& params);
  static OptimizerState sgd_exp_decay(double lr, double decay_rate, std::int64_t decay_steps);

  // Learning rate the next step will use: learning_rate for Adam,
  // lr * decay_rate^(step_count / decay_steps) for exponential decay
  // (real-valued exponent).
  double effective_lr() const;
};

void adam_step(OptimizerState& state, const std::vector<models::ParamBlock*>& params,
               const std::vector<const Tensor*>& grads);

void sgd_exp_decay_step(OptimizerState& state, const std::vector<models::ParamBlock*>& params,
                        const std::vector<const Tensor*>& grads);

// Dispatches on state.kind.
void optimizer_step(OptimizerState& state, const std::vector<models::ParamBlock*>& params,
                    const std::vector<const Tensor*>& grads);

// Rescales gradients in place so their global L2 norm is at most max_norm;
// returns the norm before clipping.
double clip_global_norm(const std::vector<Tensor*>& grads, double max_norm);

}  // namespace ccep::training
