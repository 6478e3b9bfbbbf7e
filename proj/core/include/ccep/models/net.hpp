// net.hpp - minimal feed-forward stack with hand-written backward passes.
//
// Layers operate on NHWC batches (or (N,D) after Flatten) in double
// precision. A Net holds parameters only; per-call activations live in a
// ForwardCtx and gradients accumulate into a caller-owned GradBuffer, so
// batch shards can run concurrently against one read-only model.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ccep/rng.hpp"
#include "ccep/tensor.hpp"

namespace ccep::models {

enum class LayerKind {
  Conv2d,      // stride 1, zero "same" padding, square kernel
  Dense,
  Relu,
  Sigmoid,
  MaxPool2x2,  // stride 2, requires even spatial dims
  Upsample2x,  // nearest neighbour
  Flatten,
  Reshape,     // (N,D) -> (N,H,W,C)
  Dropout,     // inverted dropout; identity in eval mode
};

struct LayerSpec {
  LayerKind kind = LayerKind::Relu;
  int out_channels = 0;            // Conv2d
  int kernel = 3;                  // Conv2d: 1 or 3
  int units = 0;                   // Dense
  double rate = 0.0;               // Dropout probability of zeroing
  std::vector<int> target_hwc;     // Reshape

  static LayerSpec conv(int out_channels, int kernel = 3);
  static LayerSpec dense(int units);
  static LayerSpec relu();
  static LayerSpec sigmoid();
  static LayerSpec maxpool();
  static LayerSpec upsample();
  static LayerSpec flatten();
  static LayerSpec reshape(int h, int w, int c);
  static LayerSpec dropout(double rate);
};

struct ParamBlock {
  std::string name;
  Tensor w;
};

/// Per-layer gradient storage aligned with a Net's parameter blocks.
struct GradBuffer {
  std::vector<Tensor> g;
  void zero();
  void add(const GradBuffer& other);
  double squared_norm() const;
};

/// Activation cache for one forward call; reused across calls to avoid
/// reallocation. One ForwardCtx per concurrent caller.
struct ForwardCtx {
  Tensor input;
  std::vector<Tensor> out;                     // per layer
  std::vector<std::vector<std::int32_t>> arg;  // maxpool argmax
  std::vector<std::vector<std::uint8_t>> keep; // dropout masks
  bool train_mode = false;
};

class Net {
 public:
  /// input_shape: (H,W,C) for image input or (D) for vector input.
  Net(std::string name, std::vector<int> input_shape, std::vector<LayerSpec> layers);

  /// Uniform fan-in init (U(-sqrt(1/fan_in), sqrt(1/fan_in)), zero biases),
  /// drawing in fixed layer order.
  void init_params(Rng& rng);

  /// Runs the stack; result lives in ctx and is returned by reference.
  /// instance_offset is the global index of batch row 0, used to derive
  /// schedule-independent per-instance dropout masks.
  const Tensor& forward(const Tensor& x, ForwardCtx& ctx, bool train_mode = false,
                        std::uint64_t dropout_seed = 0, std::size_t instance_offset = 0) const;

  /// Backpropagates dout (same shape as forward output), accumulating
  /// parameter gradients into gb (+=) and returning d(input).
  Tensor backward(const Tensor& dout, const ForwardCtx& ctx, GradBuffer& gb) const;

  GradBuffer make_grad_buffer() const;

  std::vector<ParamBlock>& params() { return params_; }
  const std::vector<ParamBlock>& params() const { return params_; }
  std::size_t param_count() const;

  const std::vector<int>& input_shape() const { return input_shape_; }
  /// Output shape for batch size b (leading dim b).
  std::vector<int> output_shape(int b) const;
  const std::string& name() const { return name_; }
  const std::vector<LayerSpec>& layers() const { return layers_; }

 private:
  std::string name_;
  std::vector<int> input_shape_;
  std::vector<LayerSpec> layers_;
  std::vector<std::vector<int>> shapes_;       // per-layer output shape (no batch dim)
  std::vector<ParamBlock> params_;
  std::vector<int> param_index_;               // layer -> first param block (-1 if none)

  void infer_shapes();
};

/// Row-wise softmax with max subtraction; input (N,C) logits.
Tensor softmax_rows(const Tensor& logits);

}  // namespace ccep::models
