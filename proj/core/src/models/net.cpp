#include "ccep/models/net.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ccep::models {

LayerSpec LayerSpec::conv(int out_channels, int kernel) {
  LayerSpec s;
  s.kind = LayerKind::Conv2d;
  s.out_channels = out_channels;
  s.kernel = kernel;
  return s;
}
LayerSpec LayerSpec::dense(int units) {
  LayerSpec s;
  s.kind = LayerKind::Dense;
  s.units = units;
  return s;
}
namespace {
LayerSpec plain(LayerKind kind) {
  LayerSpec s;
  s.kind = kind;
  return s;
}
}  // namespace

LayerSpec LayerSpec::relu() { return plain(LayerKind::Relu); }
LayerSpec LayerSpec::sigmoid() { return plain(LayerKind::Sigmoid); }
LayerSpec LayerSpec::maxpool() { return plain(LayerKind::MaxPool2x2); }
LayerSpec LayerSpec::upsample() { return plain(LayerKind::Upsample2x); }
LayerSpec LayerSpec::flatten() { return plain(LayerKind::Flatten); }
LayerSpec LayerSpec::reshape(int h, int w, int c) {
  LayerSpec s;
  s.kind = LayerKind::Reshape;
  s.target_hwc = {h, w, c};
  return s;
}
LayerSpec LayerSpec::dropout(double rate) {
  LayerSpec s;
  s.kind = LayerKind::Dropout;
  s.rate = rate;
  return s;
}

void GradBuffer::zero() {
  for (auto& t : g) t.fill(0.0);
}

void GradBuffer::add(const GradBuffer& other) {
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto& src = other.g[i].v;
    auto& dst = g[i].v;
    for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
  }
}

double GradBuffer::squared_norm() const {
  double s = 0.0;
  for (const auto& t : g) {
    for (double x : t.v) s += x * x;
  }
  return s;
}

Net::Net(std::string name, std::vector<int> input_shape, std::vector<LayerSpec> layers)
    : name_(std::move(name)), input_shape_(std::move(input_shape)), layers_(std::move(layers)) {
  infer_shapes();
}

void Net::infer_shapes() {
  std::vector<int> cur = input_shape_;
  param_index_.assign(layers_.size(), -1);
  for (std::size_t li = 0; li < layers_.size(); ++li) {
    const LayerSpec& L = layers_[li];
    switch (L.kind) {
      case LayerKind::Conv2d: {
        if (cur.size() != 3) throw std::invalid_argument(name_ + ": Conv2d needs HWC input");
        if (L.kernel != 1 && L.kernel != 3) {
          throw std::invalid_argument(name_ + ": Conv2d kernel must be 1 or 3");
        }
        param_index_[li] = static_cast<int>(params_.size());
        std::string tag = name_ + ".conv" + std::to_string(li);
        params_.push_back({tag + ".w", Tensor({L.kernel, L.kernel, cur[2], L.out_channels})});
        params_.push_back({tag + ".b", Tensor({L.out_channels})});
        cur = {cur[0], cur[1], L.out_channels};
        break;
      }
      case LayerKind::Dense: {
        if (cur.size() != 1) throw std::invalid_argument(name_ + ": Dense needs flat input");
        param_index_[li] = static_cast<int>(params_.size());
        std::string tag = name_ + ".dense" + std::to_string(li);
        params_.push_back({tag + ".w", Tensor({cur[0], L.units})});
        params_.push_back({tag + ".b", Tensor({L.units})});
        cur = {L.units};
        break;
      }
      case LayerKind::MaxPool2x2:
        if (cur.size() != 3 || cur[0] % 2 || cur[1] % 2) {
          throw std::invalid_argument(name_ + ": MaxPool2x2 needs even HWC input, got " +
                                      shape_str(cur));
        }
        cur = {cur[0] / 2, cur[1] / 2, cur[2]};
        break;
      case LayerKind::Upsample2x:
        if (cur.size() != 3) throw std::invalid_argument(name_ + ": Upsample2x needs HWC input");
        cur = {cur[0] * 2, cur[1] * 2, cur[2]};
        break;
      case LayerKind::Flatten:
        if (cur.size() != 3) throw std::invalid_argument(name_ + ": Flatten needs HWC input");
        cur = {cur[0] * cur[1] * cur[2]};
        break;
      case LayerKind::Reshape: {
        if (cur.size() != 1) throw std::invalid_argument(name_ + ": Reshape needs flat input");
        std::size_t want = shape_numel(L.target_hwc);
        if (want != static_cast<std::size_t>(cur[0])) {
          throw std::invalid_argument(name_ + ": Reshape element count mismatch");
        }
        cur = L.target_hwc;
        break;
      }
      case LayerKind::Relu:
      case LayerKind::Sigmoid:
      case LayerKind::Dropout:
        break;
    }
    shapes_.push_back(cur);
  }
}

void Net::init_params(Rng& rng) {
  for (std::size_t li = 0; li < layers_.size(); ++li) {
    int pi = param_index_[li];
    if (pi < 0) continue;
    const LayerSpec& L = layers_[li];
    Tensor& w = params_[static_cast<std::size_t>(pi)].w;
    Tensor& b = params_[static_cast<std::size_t>(pi) + 1].w;
    int fan_in = (L.kind == LayerKind::Conv2d) ? L.kernel * L.kernel * w.shape[2] : w.shape[0];
    double bound = std::sqrt(1.0 / fan_in);
    for (auto& x : w.v) x = (rng.uniform() * 2.0 - 1.0) * bound;
    b.fill(0.0);
  }
}

GradBuffer Net::make_grad_buffer() const {
  GradBuffer gb;
  gb.g.reserve(params_.size());
  for (const auto& p : params_) gb.g.emplace_back(p.w.shape);
  return gb;
}

std::size_t Net::param_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.w.numel();
  return n;
}

std::vector<int> Net::output_shape(int b) const {
  std::vector<int> s = shapes_.empty() ? input_shape_ : shapes_.back();
  s.insert(s.begin(), b);
  return s;
}

namespace {

void conv_forward(const Tensor& in, const Tensor& w, const Tensor& b, Tensor& out) {
  const int B = in.shape[0], H = in.shape[1], W = in.shape[2], IC = in.shape[3];
  const int K = w.shape[0], OC = w.shape[3];
  const int pad = K / 2;
  const double* wd = w.v.data();
  for (int n = 0; n < B; ++n) {
    for (int y = 0; y < H; ++y) {
      for (int x = 0; x < W; ++x) {
        double* o = &out.v[((static_cast<std::size_t>(n) * H + y) * W + x) * OC];
        for (int oc = 0; oc < OC; ++oc) o[oc] = b.v[static_cast<std::size_t>(oc)];
        for (int ky = 0; ky < K; ++ky) {
          int iy = y + ky - pad;
          if (iy < 0 || iy >= H) continue;
          for (int kx = 0; kx < K; ++kx) {
            int ix = x + kx - pad;
            if (ix < 0 || ix >= W) continue;
            const double* ip = &in.v[((static_cast<std::size_t>(n) * H + iy) * W + ix) * IC];
            const double* wp = wd + ((static_cast<std::size_t>(ky) * K + kx) * IC) * OC;
            for (int ic = 0; ic < IC; ++ic) {
              double a = ip[ic];
              const double* wr = wp + static_cast<std::size_t>(ic) * OC;
              for (int oc = 0; oc < OC; ++oc) o[oc] += a * wr[oc];
            }
          }
        }
      }
    }
  }
}

void conv_backward(const Tensor& in, const Tensor& w, const Tensor& dout, Tensor& din,
                   Tensor& dw, Tensor& db) {
  const int B = in.shape[0], H = in.shape[1], W = in.shape[2], IC = in.shape[3];
  const int K = w.shape[0], OC = w.shape[3];
  const int pad = K / 2;
  din.fill(0.0);
  for (int n = 0; n < B; ++n) {
    for (int y = 0; y < H; ++y) {
      for (int x = 0; x < W; ++x) {
        const double* go = &dout.v[((static_cast<std::size_t>(n) * H + y) * W + x) * OC];
        for (int oc = 0; oc < OC; ++oc) db.v[static_cast<std::size_t>(oc)] += go[oc];
        for (int ky = 0; ky < K; ++ky) {
          int iy = y + ky - pad;
          if (iy < 0 || iy >= H) continue;
          for (int kx = 0; kx < K; ++kx) {
            int ix = x + kx - pad;
            if (ix < 0 || ix >= W) continue;
            const double* ip = &in.v[((static_cast<std::size_t>(n) * H + iy) * W + ix) * IC];
            double* dip = &din.v[((static_cast<std::size_t>(n) * H + iy) * W + ix) * IC];
            std::size_t wbase = (static_cast<std::size_t>(ky) * K + kx) * IC * OC;
            for (int ic = 0; ic < IC; ++ic) {
              const double a = ip[ic];
              const double* wr = &w.v[wbase + static_cast<std::size_t>(ic) * OC];
              double* dwr = &dw.v[wbase + static_cast<std::size_t>(ic) * OC];
              double acc = 0.0;
              for (int oc = 0; oc < OC; ++oc) {
                dwr[oc] += a * go[oc];
                acc += wr[oc] * go[oc];
              }
              dip[ic] += acc;
            }
          }
        }
      }
    }
  }
}

void dense_forward(const Tensor& in, const Tensor& w, const Tensor& b, Tensor& out) {
  const int B = in.shape[0], D = in.shape[1], U = w.shape[1];
  for (int n = 0; n < B; ++n) {
    double* o = &out.v[static_cast<std::size_t>(n) * U];
    for (int u = 0; u < U; ++u) o[u] = b.v[static_cast<std::size_t>(u)];
    const double* ip = &in.v[static_cast<std::size_t>(n) * D];
    for (int d = 0; d < D; ++d) {
      const double a = ip[d];
      if (a == 0.0) continue;
      const double* wr = &w.v[static_cast<std::size_t>(d) * U];
      for (int u = 0; u < U; ++u) o[u] += a * wr[u];
    }
  }
}

void dense_backward(const Tensor& in, const Tensor& w, const Tensor& dout, Tensor& din,
                    Tensor& dw, Tensor& db) {
  const int B = in.shape[0], D = in.shape[1], U = w.shape[1];
  for (int n = 0; n < B; ++n) {
    const double* go = &dout.v[static_cast<std::size_t>(n) * U];
    for (int u = 0; u < U; ++u) db.v[static_cast<std::size_t>(u)] += go[u];
    const double* ip = &in.v[static_cast<std::size_t>(n) * D];
    double* dip = &din.v[static_cast<std::size_t>(n) * D];
    for (int d = 0; d < D; ++d) {
      const double a = ip[d];
      const double* wr = &w.v[static_cast<std::size_t>(d) * U];
      double* dwr = &dw.v[static_cast<std::size_t>(d) * U];
      double acc = 0.0;
      for (int u = 0; u < U; ++u) {
        dwr[u] += a * go[u];
        acc += wr[u] * go[u];
      }
      dip[d] = acc;
    }
  }
}

}  // namespace

const Tensor& Net::forward(const Tensor& x, ForwardCtx& ctx, bool train_mode,
                           std::uint64_t dropout_seed, std::size_t instance_offset) const {
  std::vector<int> expect = input_shape_;
  expect.insert(expect.begin(), x.shape.empty() ? 0 : x.shape[0]);
  if (x.shape != expect) throw ShapeError(name_ + " input", expect, x.shape);
  const int B = x.shape[0];

  ctx.input = x;
  ctx.out.resize(layers_.size());
  ctx.arg.assign(layers_.size(), {});
  ctx.keep.assign(layers_.size(), {});
  ctx.train_mode = train_mode;

  const Tensor* cur = &ctx.input;
  for (std::size_t li = 0; li < layers_.size(); ++li) {
    const LayerSpec& L = layers_[li];
    std::vector<int> oshape = shapes_[li];
    oshape.insert(oshape.begin(), B);
    Tensor& out = ctx.out[li];
    if (out.shape != oshape) out = Tensor(oshape);

    switch (L.kind) {
      case LayerKind::Conv2d: {
        std::size_t pi = static_cast<std::size_t>(param_index_[li]);
        conv_forward(*cur, params_[pi].w, params_[pi + 1].w, out);
        break;
      }
      case LayerKind::Dense: {
        std::size_t pi = static_cast<std::size_t>(param_index_[li]);
        dense_forward(*cur, params_[pi].w, params_[pi + 1].w, out);
        break;
      }
      case LayerKind::Relu:
        for (std::size_t i = 0; i < cur->v.size(); ++i) out.v[i] = std::max(0.0, cur->v[i]);
        break;
      case LayerKind::Sigmoid:
        for (std::size_t i = 0; i < cur->v.size(); ++i) out.v[i] = 1.0 / (1.0 + std::exp(-cur->v[i]));
        break;
      case LayerKind::MaxPool2x2: {
        const int H = cur->shape[1], W = cur->shape[2], C = cur->shape[3];
        const int OH = H / 2, OW = W / 2;
        auto& arg = ctx.arg[li];
        arg.resize(out.v.size());
        for (int n = 0; n < B; ++n) {
          for (int oy = 0; oy < OH; ++oy) {
            for (int ox = 0; ox < OW; ++ox) {
              for (int c = 0; c < C; ++c) {
                double best = -1e300;
                std::int32_t bi = 0;
                for (int dy = 0; dy < 2; ++dy) {
                  for (int dx = 0; dx < 2; ++dx) {
                    std::size_t idx =
                        ((static_cast<std::size_t>(n) * H + (2 * oy + dy)) * W + (2 * ox + dx)) * C + c;
                    double v = cur->v[idx];
                    if (v > best) {
                      best = v;
                      bi = static_cast<std::int32_t>(idx);
                    }
                  }
                }
                std::size_t oidx = ((static_cast<std::size_t>(n) * OH + oy) * OW + ox) * C + c;
                out.v[oidx] = best;
                arg[oidx] = bi;
              }
            }
          }
        }
        break;
      }
      case LayerKind::Upsample2x: {
        const int H = cur->shape[1], W = cur->shape[2], C = cur->shape[3];
        for (int n = 0; n < B; ++n) {
          for (int y = 0; y < H; ++y) {
            for (int x2 = 0; x2 < W; ++x2) {
              const double* ip = &cur->v[((static_cast<std::size_t>(n) * H + y) * W + x2) * C];
              for (int dy = 0; dy < 2; ++dy) {
                for (int dx = 0; dx < 2; ++dx) {
                  double* op = &out.v[((static_cast<std::size_t>(n) * 2 * H + (2 * y + dy)) * 2 * W +
                                       (2 * x2 + dx)) * C];
                  for (int c = 0; c < C; ++c) op[c] = ip[c];
                }
              }
            }
          }
        }
        break;
      }
      case LayerKind::Flatten:
      case LayerKind::Reshape:
        out.v = cur->v;
        break;
      case LayerKind::Dropout: {
        if (!train_mode || L.rate <= 0.0) {
          out.v = cur->v;
        } else {
          auto& keep = ctx.keep[li];
          keep.resize(cur->v.size());
          const double q = 1.0 - L.rate;
          const double scale = 1.0 / q;
          const std::size_t per = cur->v.size() / static_cast<std::size_t>(B);
          for (int n = 0; n < B; ++n) {
            // Per-instance stream keyed by global index: shard-independent.
            Rng r(derive_seed(dropout_seed, "drop:" + std::to_string(instance_offset + n)));
            for (std::size_t j = 0; j < per; ++j) {
              std::size_t idx = static_cast<std::size_t>(n) * per + j;
              bool k = r.uniform() < q;
              keep[idx] = k ? 1 : 0;
              out.v[idx] = k ? cur->v[idx] * scale : 0.0;
            }
          }
        }
        break;
      }
    }
    cur = &out;
  }
  return *cur;
}

Tensor Net::backward(const Tensor& dout, const ForwardCtx& ctx, GradBuffer& gb) const {
  const int B = ctx.input.shape[0];
  Tensor grad = dout;
  for (int li = static_cast<int>(layers_.size()) - 1; li >= 0; --li) {
    const LayerSpec& L = layers_[static_cast<std::size_t>(li)];
    const Tensor& in = (li == 0) ? ctx.input : ctx.out[static_cast<std::size_t>(li) - 1];
    const Tensor& out = ctx.out[static_cast<std::size_t>(li)];
    Tensor din;
    switch (L.kind) {
      case LayerKind::Conv2d: {
        std::size_t pi = static_cast<std::size_t>(param_index_[static_cast<std::size_t>(li)]);
        din = Tensor(in.shape);
        conv_backward(in, params_[pi].w, grad, din, gb.g[pi], gb.g[pi + 1]);
        break;
      }
      case LayerKind::Dense: {
        std::size_t pi = static_cast<std::size_t>(param_index_[static_cast<std::size_t>(li)]);
        din = Tensor(in.shape);
        dense_backward(in, params_[pi].w, grad, din, gb.g[pi], gb.g[pi + 1]);
        break;
      }
      case LayerKind::Relu:
        din = Tensor(in.shape);
        for (std::size_t i = 0; i < in.v.size(); ++i) din.v[i] = in.v[i] > 0.0 ? grad.v[i] : 0.0;
        break;
      case LayerKind::Sigmoid:
        din = Tensor(in.shape);
        for (std::size_t i = 0; i < in.v.size(); ++i) {
          double s = out.v[i];
          din.v[i] = grad.v[i] * s * (1.0 - s);
        }
        break;
      case LayerKind::MaxPool2x2: {
        din = Tensor(in.shape);
        const auto& arg = ctx.arg[static_cast<std::size_t>(li)];
        for (std::size_t i = 0; i < grad.v.size(); ++i) {
          din.v[static_cast<std::size_t>(arg[i])] += grad.v[i];
        }
        break;
      }
      case LayerKind::Upsample2x: {
        din = Tensor(in.shape);
        const int H = in.shape[1], W = in.shape[2], C = in.shape[3];
        for (int n = 0; n < B; ++n) {
          for (int y = 0; y < H; ++y) {
            for (int x2 = 0; x2 < W; ++x2) {
              double* dp = &din.v[((static_cast<std::size_t>(n) * H + y) * W + x2) * C];
              for (int dy = 0; dy < 2; ++dy) {
                for (int dx = 0; dx < 2; ++dx) {
                  const double* gp =
                      &grad.v[((static_cast<std::size_t>(n) * 2 * H + (2 * y + dy)) * 2 * W +
                               (2 * x2 + dx)) * C];
                  for (int c = 0; c < C; ++c) dp[c] += gp[c];
                }
              }
            }
          }
        }
        break;
      }
      case LayerKind::Flatten:
      case LayerKind::Reshape:
        din = Tensor(in.shape);
        din.v = grad.v;
        break;
      case LayerKind::Dropout: {
        din = Tensor(in.shape);
        const auto& keep = ctx.keep[static_cast<std::size_t>(li)];
        if (!ctx.train_mode || L.rate <= 0.0 || keep.empty()) {
          din.v = grad.v;
        } else {
          const double scale = 1.0 / (1.0 - L.rate);
          for (std::size_t i = 0; i < grad.v.size(); ++i) {
            din.v[i] = keep[i] ? grad.v[i] * scale : 0.0;
          }
        }
        break;
      }
    }
    grad = std::move(din);
  }
  return grad;
}

Tensor softmax_rows(const Tensor& logits) {
  const int B = logits.shape[0], C = logits.shape[1];
  Tensor p(logits.shape);
  for (int n = 0; n < B; ++n) {
    const double* in = &logits.v[static_cast<std::size_t>(n) * C];
    double* out = &p.v[static_cast<std::size_t>(n) * C];
    double mx = in[0];
    for (int c = 1; c < C; ++c) mx = std::max(mx, in[c]);
    double sum = 0.0;
    for (int c = 0; c < C; ++c) {
      out[c] = std::exp(in[c] - mx);
      sum += out[c];
    }
    for (int c = 0; c < C; ++c) out[c] /= sum;
  }
  return p;
}

}  // namespace ccep::models
