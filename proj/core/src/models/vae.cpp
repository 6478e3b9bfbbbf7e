#include "ccep/models/vae.hpp"

#include <cmath>
#include <stdexcept>

namespace ccep::models {

namespace {
constexpr double kClampEps = 1e-7;
}

VaeArch VaeArch::preset(const std::string& name) {
  VaeArch a;
  a.name = name;
  if (name == "mnist") {
    a.conv_channels = {32, 32};
    a.pool_after = {1, 1};
    a.dense = 512;
    a.latent = 64;
  } else if (name == "mnist-reduced") {
    a.conv_channels = {16, 16};
    a.pool_after = {1, 1};
    a.dense = 256;
    a.latent = 32;
  } else if (name == "camelyon") {
    a.input_h = a.input_w = 256;
    a.input_c = 3;
    a.conv_channels = {64, 128, 64, 64};
    a.pool_after = {1, 1, 1, 0};
    a.dense = 256;
    a.latent = 24;
  } else if (name == "patch-small") {
    a.input_h = a.input_w = 64;
    a.input_c = 3;
    a.conv_channels = {16, 32, 16};
    a.pool_after = {1, 1, 1};
    a.dense = 256;
    a.latent = 24;
  } else {
    throw std::invalid_argument("unknown VAE preset: " + name);
  }
  return a;
}

namespace {

struct MirrorDims {
  int h, w, c;
};

MirrorDims bottleneck(const VaeArch& a) {
  int h = a.input_h, w = a.input_w;
  for (std::size_t i = 0; i < a.conv_channels.size(); ++i) {
    if (a.pool_after[i]) {
      h /= 2;
      w /= 2;
    }
  }
  return {h, w, a.conv_channels.back()};
}

Net build_encoder(const VaeArch& a) {
  std::vector<LayerSpec> layers;
  for (std::size_t i = 0; i < a.conv_channels.size(); ++i) {
    layers.push_back(LayerSpec::conv(a.conv_channels[i]));
    layers.push_back(LayerSpec::relu());
    if (a.pool_after[i]) layers.push_back(LayerSpec::maxpool());
  }
  layers.push_back(LayerSpec::flatten());
  layers.push_back(LayerSpec::dense(a.dense));
  layers.push_back(LayerSpec::relu());
  return Net("vae.enc", {a.input_h, a.input_w, a.input_c}, std::move(layers));
}

Net build_decoder(const VaeArch& a) {
  MirrorDims bd = bottleneck(a);
  std::vector<LayerSpec> layers;
  layers.push_back(LayerSpec::dense(a.dense));
  layers.push_back(LayerSpec::relu());
  layers.push_back(LayerSpec::dense(bd.h * bd.w * bd.c));
  layers.push_back(LayerSpec::relu());
  layers.push_back(LayerSpec::reshape(bd.h, bd.w, bd.c));
  for (int i = static_cast<int>(a.conv_channels.size()) - 1; i >= 0; --i) {
    if (a.pool_after[static_cast<std::size_t>(i)]) layers.push_back(LayerSpec::upsample());
    layers.push_back(LayerSpec::conv(a.conv_channels[static_cast<std::size_t>(i)]));
    layers.push_back(LayerSpec::relu());
  }
  // Output logits; sigmoid is applied (and fused with the BCE gradient)
  // by the loss path, and by decode() for external callers.
  layers.push_back(LayerSpec::conv(a.input_c, 1));
  return Net("vae.dec", {a.latent}, std::move(layers));
}

}  // namespace

void VaeGrads::zero() {
  encoder.zero();
  mean_head.zero();
  logvar_head.zero();
  decoder.zero();
}

void VaeGrads::add(const VaeGrads& other) {
  encoder.add(other.encoder);
  mean_head.add(other.mean_head);
  logvar_head.add(other.logvar_head);
  decoder.add(other.decoder);
}

double VaeGrads::squared_norm() const {
  return encoder.squared_norm() + mean_head.squared_norm() + logvar_head.squared_norm() +
         decoder.squared_norm();
}

VaeModel::VaeModel(const VaeArch& arch, std::uint64_t init_seed)
    : arch_(arch),
      encoder_(build_encoder(arch)),
      mean_head_(Net("vae.mean", {arch.dense}, {LayerSpec::dense(arch.latent)})),
      logvar_head_(Net("vae.logvar", {arch.dense}, {LayerSpec::dense(arch.latent)})),
      decoder_(build_decoder(arch)) {
  Rng rng(init_seed);
  encoder_.init_params(rng);
  mean_head_.init_params(rng);
  logvar_head_.init_params(rng);
  decoder_.init_params(rng);
}

VaeGrads VaeModel::make_grads() const {
  return {encoder_.make_grad_buffer(), mean_head_.make_grad_buffer(),
          logvar_head_.make_grad_buffer(), decoder_.make_grad_buffer()};
}

std::vector<ParamBlock*> VaeModel::param_blocks() {
  std::vector<ParamBlock*> out;
  for (auto* net : {&encoder_, &mean_head_, &logvar_head_, &decoder_}) {
    for (auto& p : net->params()) out.push_back(&p);
  }
  return out;
}

std::vector<const ParamBlock*> VaeModel::param_blocks() const {
  std::vector<const ParamBlock*> out;
  for (const auto* net : {&encoder_, &mean_head_, &logvar_head_, &decoder_}) {
    for (const auto& p : net->params()) out.push_back(&p);
  }
  return out;
}

std::vector<Tensor*> VaeModel::grad_tensors(VaeGrads& grads) const {
  std::vector<Tensor*> out;
  for (auto* gb : {&grads.encoder, &grads.mean_head, &grads.logvar_head, &grads.decoder}) {
    for (auto& t : gb->g) out.push_back(&t);
  }
  return out;
}

std::size_t VaeModel::param_count() const {
  return encoder_.param_count() + mean_head_.param_count() + logvar_head_.param_count() +
         decoder_.param_count();
}

std::vector<LatentCode> VaeModel::encode(const Tensor& batch, std::uint64_t noise_seed,
                                         bool stochastic) const {
  VaeCtx ctx;
  const Tensor& t = encoder_.forward(batch, ctx.enc);
  const Tensor& mean = mean_head_.forward(t, ctx.mean);
  const Tensor& logvar = logvar_head_.forward(t, ctx.logvar);
  const int B = batch.shape[0], L = arch_.latent;

  std::vector<LatentCode> codes(static_cast<std::size_t>(B));
  for (int n = 0; n < B; ++n) {
    LatentCode& c = codes[static_cast<std::size_t>(n)];
    c.mean.resize(static_cast<std::size_t>(L));
    c.log_variance.resize(static_cast<std::size_t>(L));
    c.sample.resize(static_cast<std::size_t>(L));
    Rng noise(derive_seed(noise_seed, "vae-noise:" + std::to_string(n)));
    for (int d = 0; d < L; ++d) {
      double m = mean.at2(n, d);
      double lv = logvar.at2(n, d);
      c.mean[static_cast<std::size_t>(d)] = m;
      c.log_variance[static_cast<std::size_t>(d)] = lv;
      c.sample[static_cast<std::size_t>(d)] =
          stochastic ? m + std::exp(0.5 * lv) * noise.normal() : m;
    }
  }
  return codes;
}

Tensor VaeModel::decode(const std::vector<LatentCode>& codes) const {
  const int B = static_cast<int>(codes.size());
  const int L = arch_.latent;
  Tensor z({B, L});
  for (int n = 0; n < B; ++n) {
    if (static_cast<int>(codes[static_cast<std::size_t>(n)].sample.size()) != L) {
      throw ShapeError(
          "vae.decode code", std::vector<int>{L},
          std::vector<int>{static_cast<int>(codes[static_cast<std::size_t>(n)].sample.size())});
    }
    for (int d = 0; d < L; ++d) {
      z.at2(n, d) = codes[static_cast<std::size_t>(n)].sample[static_cast<std::size_t>(d)];
    }
  }
  VaeCtx ctx;
  const Tensor& logits = decoder_.forward(z, ctx.dec);
  Tensor probs(logits.shape);
  for (std::size_t i = 0; i < logits.v.size(); ++i) {
    probs.v[i] = 1.0 / (1.0 + std::exp(-logits.v[i]));
  }
  return probs;
}

VaeLoss VaeModel::loss(const Tensor& batch, std::uint64_t noise_seed) const {
  VaeCtx ctx;
  return run(batch, noise_seed, false, nullptr, ctx, 0);
}

VaeLoss VaeModel::loss_and_gradients(const Tensor& batch, std::uint64_t noise_seed,
                                     VaeGrads& grads, std::size_t instance_offset) const {
  VaeCtx ctx;
  return run(batch, noise_seed, true, &grads, ctx, instance_offset);
}

VaeLoss VaeModel::run(const Tensor& batch, std::uint64_t noise_seed, bool with_grads,
                      VaeGrads* grads, VaeCtx& ctx, std::size_t instance_offset) const {
  const int B = batch.shape.empty() ? 0 : batch.shape[0];
  const int L = arch_.latent;

  const Tensor& t = encoder_.forward(batch, ctx.enc);
  if (!t.all_finite()) throw NumericError("vae: non-finite activations in encoder trunk");
  const Tensor& mean = mean_head_.forward(t, ctx.mean);
  const Tensor& logvar = logvar_head_.forward(t, ctx.logvar);

  // Reparameterize with per-instance noise streams.
  ctx.noise = Tensor({B, L});
  ctx.z = Tensor({B, L});
  for (int n = 0; n < B; ++n) {
    Rng noise(derive_seed(noise_seed, "vae-noise:" + std::to_string(instance_offset +
                                                                    static_cast<std::size_t>(n))));
    for (int d = 0; d < L; ++d) {
      double e = noise.normal();
      ctx.noise.at2(n, d) = e;
      ctx.z.at2(n, d) = mean.at2(n, d) + std::exp(0.5 * logvar.at2(n, d)) * e;
    }
  }

  const Tensor& logits = decoder_.forward(ctx.z, ctx.dec);
  if (!logits.all_finite()) throw NumericError("vae: non-finite activations in decoder");
  ctx.probs = Tensor(logits.shape);
  for (std::size_t i = 0; i < logits.v.size(); ++i) {
    ctx.probs.v[i] = 1.0 / (1.0 + std::exp(-logits.v[i]));
  }

  VaeLoss out;
  const double invB = 1.0 / B;
  for (std::size_t i = 0; i < ctx.probs.v.size(); ++i) {
    double x = batch.v[i];
    double p = std::min(std::max(ctx.probs.v[i], kClampEps), 1.0 - kClampEps);
    out.reconstruction -= (x * std::log(p) + (1.0 - x) * std::log(1.0 - p)) * invB;
  }
  for (int n = 0; n < B; ++n) {
    double acc = 0.0;
    for (int d = 0; d < L; ++d) {
      double m = mean.at2(n, d), lv = logvar.at2(n, d);
      acc += 1.0 + lv - m * m - std::exp(lv);
    }
    out.kl -= 0.5 * acc * invB;
  }
  out.total = out.reconstruction + out.kl;
  if (!std::isfinite(out.total)) throw NumericError("vae: non-finite loss terms");

  if (!with_grads) return out;

  Tensor dlogits(logits.shape);
  for (std::size_t i = 0; i < dlogits.v.size(); ++i) {
    dlogits.v[i] = (ctx.probs.v[i] - batch.v[i]) * invB;
  }
  Tensor dz = decoder_.backward(dlogits, ctx.dec, grads->decoder);

  Tensor dmean({B, L}), dlogvar({B, L});
  for (int n = 0; n < B; ++n) {
    for (int d = 0; d < L; ++d) {
      double m = mean.at2(n, d), lv = logvar.at2(n, d);
      double e = ctx.noise.at2(n, d);
      double g = dz.at2(n, d);
      dmean.at2(n, d) = g + m * invB;
      dlogvar.at2(n, d) = g * e * 0.5 * std::exp(0.5 * lv) + 0.5 * (std::exp(lv) - 1.0) * invB;
    }
  }
  Tensor dt = mean_head_.backward(dmean, ctx.mean, grads->mean_head);
  Tensor dt2 = logvar_head_.backward(dlogvar, ctx.logvar, grads->logvar_head);
  for (std::size_t i = 0; i < dt.v.size(); ++i) dt.v[i] += dt2.v[i];
  encoder_.backward(dt, ctx.enc, grads->encoder);
  return out;
}

}  // namespace ccep::models
