// vae.hpp - convolutional variational autoencoder.
//
// Encoder: conv/pool stack -> dense -> ReLU -> linear mean and log-variance
// heads. Decoder mirrors the encoder (dense -> dense -> reshape -> upsample
// + conv blocks -> 1x1 conv) with a sigmoid output the same shape as the
// input. Trained on the Bernoulli ELBO: pixel binary cross-entropy plus
// KL(q(z|x) || N(0,I)).

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ccep/models/net.hpp"

namespace ccep::models {

/// Mean / log-variance / sampled encoding for one instance.
struct LatentCode {
  std::vector<double> mean;
  std::vector<double> log_variance;
  std::vector<double> sample;
};

struct VaeArch {
  std::string name;        // preset identifier, stored in checkpoints
  int input_h = 28, input_w = 28, input_c = 1;
  std::vector<int> conv_channels;  // conv(+ReLU) stages
  std::vector<int> pool_after;     // 1 = maxpool follows that stage
  int dense = 512;
  int latent = 64;

  /// "mnist" (Table-layout 32/32, dense 512, latent 64),
  /// "mnist-reduced" (half widths), "camelyon" (64/128/64/64, dense 256,
  /// latent 24 on 256x256x3), "patch-small" (desk-scale RGB patches).
  static VaeArch preset(const std::string& name);
};

struct VaeLoss {
  double total = 0.0;
  double reconstruction = 0.0;
  double kl = 0.0;
};

struct VaeGrads {
  GradBuffer encoder;
  GradBuffer mean_head;
  GradBuffer logvar_head;
  GradBuffer decoder;
  void zero();
  void add(const VaeGrads& other);
  double squared_norm() const;
};

/// Scratch space for one concurrent caller.
struct VaeCtx {
  ForwardCtx enc, mean, logvar, dec;
  Tensor z;           // (B, latent)
  Tensor noise;       // (B, latent)
  Tensor probs;       // sigmoid reconstruction
};

class VaeModel {
 public:
  VaeModel(const VaeArch& arch, std::uint64_t init_seed);

  const VaeArch& arch() const { return arch_; }

  /// Deterministic (sample = mean) when stochastic is false; otherwise the
  /// reparameterized sample with per-instance seeded Gaussian noise.
  std::vector<LatentCode> encode(const Tensor& batch, std::uint64_t noise_seed,
                                 bool stochastic) const;

  /// Decodes latent samples to reconstructions in [0,1].
  Tensor decode(const std::vector<LatentCode>& codes) const;

  /// ELBO terms for a batch (forward only).
  VaeLoss loss(const Tensor& batch, std::uint64_t noise_seed) const;

  /// ELBO + parameter gradients accumulated into `grads`.
  /// instance_offset keys the per-instance noise streams.
  VaeLoss loss_and_gradients(const Tensor& batch, std::uint64_t noise_seed, VaeGrads& grads,
                             std::size_t instance_offset = 0) const;

  VaeGrads make_grads() const;

  // Parameter access for optimizers/checkpoints, in fixed order:
  // encoder, mean head, logvar head, decoder.
  std::vector<ParamBlock*> param_blocks();
  std::vector<const ParamBlock*> param_blocks() const;
  std::vector<Tensor*> grad_tensors(VaeGrads& grads) const;
  std::size_t param_count() const;

  int latent_dim() const { return arch_.latent; }

 private:
  VaeArch arch_;
  Net encoder_;
  Net mean_head_;
  Net logvar_head_;
  Net decoder_;

  VaeLoss run(const Tensor& batch, std::uint64_t noise_seed, bool with_grads, VaeGrads* grads,
              VaeCtx& ctx, std::size_t instance_offset) const;
};

}  // namespace ccep::models
