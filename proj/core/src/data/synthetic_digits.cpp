#include "ccep/data/synthetic_digits.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "ccep/data/idx.hpp"
#include "ccep/rng.hpp"

namespace ccep::data {

namespace {

struct P {
  double x, y;
};

// A glyph is a list of polylines in a unit box (x right, y down).
using Stroke = std::vector<P>;
using Glyph = std::vector<Stroke>;

Stroke arc(double cx, double cy, double rx, double ry, double a0, double a1, int n = 22) {
  Stroke s;
  s.reserve(static_cast<std::size_t>(n) + 1);
  for (int i = 0; i <= n; ++i) {
    double a = a0 + (a1 - a0) * i / n;
    s.push_back({cx + rx * std::cos(a), cy + ry * std::sin(a)});
  }
  return s;
}

Stroke line(double x0, double y0, double x1, double y1) {
  return {{x0, y0}, {x1, y1}};
}

constexpr double kPi = 3.14159265358979323846;

// Angles follow screen coordinates: 0 = right, pi/2 = down.
Glyph digit_glyph(int digit, int style) {
  switch (digit) {
    case 0:
      return {arc(0.5, 0.5, 0.30, 0.40, 0.0, 2.0 * kPi, 30)};
    case 1:
      if (style % 2 == 0) {
        return {line(0.52, 0.10, 0.52, 0.90), line(0.36, 0.26, 0.52, 0.10)};
      }
      return {line(0.5, 0.10, 0.5, 0.90), line(0.34, 0.28, 0.5, 0.10),
              line(0.32, 0.90, 0.68, 0.90)};
    case 2: {
      Glyph g = {arc(0.5, 0.30, 0.27, 0.22, -kPi * 0.95, 0.25, 16),
                 line(0.74, 0.40, 0.24, 0.86), line(0.24, 0.88, 0.78, 0.88)};
      return g;
    }
    case 3:
      return {arc(0.46, 0.295, 0.25, 0.21, -kPi * 0.80, kPi * 0.42, 16),
              arc(0.46, 0.69, 0.28, 0.24, -kPi * 0.42, kPi * 0.80, 16)};
    case 4:
      if (style % 2 == 0) {
        return {line(0.58, 0.10, 0.20, 0.62), line(0.20, 0.62, 0.82, 0.62),
                line(0.64, 0.34, 0.64, 0.92)};
      }
      return {line(0.30, 0.10, 0.30, 0.55), line(0.30, 0.55, 0.78, 0.55),
              line(0.62, 0.10, 0.62, 0.92)};
    case 5:
      return {line(0.74, 0.10, 0.30, 0.10), line(0.30, 0.10, 0.27, 0.45),
              arc(0.47, 0.66, 0.26, 0.23, -kPi * 0.42, kPi * 0.75, 18)};
    case 6:
      return {arc(0.52, 0.40, 0.34, 0.34, -kPi * 0.45, -kPi * 0.95, 12),
              arc(0.48, 0.66, 0.24, 0.23, 0.0, 2.0 * kPi, 26)};
    case 7:
      if (style % 2 == 0) {
        return {line(0.22, 0.12, 0.80, 0.12), line(0.80, 0.12, 0.40, 0.90)};
      }
      return {line(0.22, 0.12, 0.80, 0.12), line(0.80, 0.12, 0.40, 0.90),
              line(0.36, 0.50, 0.68, 0.50)};
    case 8:
      return {arc(0.5, 0.295, 0.215, 0.195, 0.0, 2.0 * kPi, 26),
              arc(0.5, 0.70, 0.26, 0.225, 0.0, 2.0 * kPi, 26)};
    case 9:
      if (style % 2 == 0) {
        return {arc(0.5, 0.32, 0.23, 0.215, 0.0, 2.0 * kPi, 26),
                line(0.725, 0.34, 0.60, 0.90)};
      }
      return {arc(0.5, 0.32, 0.23, 0.215, 0.0, 2.0 * kPi, 26),
              arc(0.47, 0.60, 0.26, 0.30, -kPi * 0.1, kPi * 0.45, 10)};
    default:
      throw std::invalid_argument("digit_glyph: digit out of range");
  }
}

double dist_to_segment(double px, double py, const P& a, const P& b) {
  double vx = b.x - a.x, vy = b.y - a.y;
  double wx = px - a.x, wy = py - a.y;
  double vv = vx * vx + vy * vy;
  double t = vv > 0 ? std::clamp((wx * vx + wy * vy) / vv, 0.0, 1.0) : 0.0;
  double dx = wx - t * vx, dy = wy - t * vy;
  return std::sqrt(dx * dx + dy * dy);
}

}  // namespace

Tensor render_digit(int digit, int style, double rotation, double scale, double shear,
                    double dx, double dy, double thickness, double jitter_seed) {
  Glyph glyph = digit_glyph(digit, style);

  // Control-point jitter makes each sample's shape unique.
  std::uint64_t js = static_cast<std::uint64_t>(jitter_seed * 1e6) + 77;
  Rng jr(js);
  const double cr = std::cos(rotation), sr = std::sin(rotation);
  const double grid = 28.0;
  const double glyph_px = 19.0 * scale;  // glyph box in pixels, like MNIST's ~20px core
  for (auto& stroke : glyph) {
    for (auto& p : stroke) {
      double jx = (jr.uniform() - 0.5) * 0.05;
      double jy = (jr.uniform() - 0.5) * 0.05;
      // unit box -> centered glyph coords
      double gx = (p.x - 0.5 + jx);
      double gy = (p.y - 0.5 + jy);
      gx += shear * gy;
      double rxp = cr * gx - sr * gy;
      double ryp = sr * gx + cr * gy;
      p.x = grid / 2.0 + rxp * glyph_px + dx;
      p.y = grid / 2.0 + ryp * glyph_px + dy;
    }
  }

  Tensor img({28, 28, 1});
  const double aa = 0.75;  // antialias band in pixels
  for (int y = 0; y < 28; ++y) {
    for (int x = 0; x < 28; ++x) {
      double px = x + 0.5, py = y + 0.5;
      double best = 1e9;
      for (const auto& stroke : glyph) {
        for (std::size_t i = 0; i + 1 < stroke.size(); ++i) {
          best = std::min(best, dist_to_segment(px, py, stroke[i], stroke[i + 1]));
        }
      }
      double v = std::clamp((thickness * 0.5 + aa - best) / aa, 0.0, 1.0);
      img.at(static_cast<std::size_t>(y) * 28 + x) = v;
    }
  }
  return img;
}

Dataset make_digit_dataset(const DigitGenSpec& spec) {
  Dataset ds;
  ds.height = 28;
  ds.width = 28;
  ds.channels = 1;
  ds.num_classes = 10;
  ds.instances.reserve(static_cast<std::size_t>(spec.per_class) * 10);
  Rng rng(spec.seed);
  std::size_t idx = 0;
  for (int digit = 0; digit < 10; ++digit) {
    for (int k = 0; k < spec.per_class; ++k) {
      int style = static_cast<int>(rng.uniform_index(2));
      double rotation = (rng.uniform() - 0.5) * 0.42;        // ~±12 deg
      double scale = 0.84 + rng.uniform() * 0.30;
      double shear = (rng.uniform() - 0.5) * 0.40;
      double dx = (rng.uniform() - 0.5) * 3.6;
      double dy = (rng.uniform() - 0.5) * 3.6;
      double thickness = 1.15 + rng.uniform() * 1.05;
      double jseed = rng.uniform() * 1000.0;

      ImageInstance inst;
      inst.pixels = render_digit(digit, style, rotation, scale, shear, dx, dy,
                                 thickness, jseed);
      double contrast = 0.82 + rng.uniform() * 0.18;
      for (auto& p : inst.pixels.v) {
        p = std::clamp(p * contrast + rng.normal() * spec.noise_sigma, 0.0, 1.0);
      }
      inst.true_label = digit;
      inst.id = spec.id_prefix + std::to_string(idx++);
      ds.instances.push_back(std::move(inst));
    }
  }
  return ds;
}

void write_digit_idx_files(const std::string& dir, int train_per_class, int test_per_class,
                           std::uint64_t seed, double noise_sigma) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);

  auto to_idx = [](const Dataset& ds) {
    IdxImages imgs;
    imgs.count = static_cast<int>(ds.size());
    imgs.rows = ds.height;
    imgs.cols = ds.width;
    imgs.pixels.reserve(ds.size() * 784);
    std::vector<std::uint8_t> labels;
    labels.reserve(ds.size());
    for (const auto& inst : ds.instances) {
      for (double p : inst.pixels.v) {
        imgs.pixels.push_back(static_cast<std::uint8_t>(std::lround(p * 255.0)));
      }
      labels.push_back(static_cast<std::uint8_t>(inst.true_label));
    }
    return std::pair{imgs, labels};
  };

  DigitGenSpec train_spec{train_per_class, derive_seed(seed, "synth-train"), noise_sigma, "sd"};
  DigitGenSpec test_spec{test_per_class, derive_seed(seed, "synth-test"), noise_sigma, "sd"};
  auto [train_imgs, train_labels] = to_idx(make_digit_dataset(train_spec));
  auto [test_imgs, test_labels] = to_idx(make_digit_dataset(test_spec));

  write_idx_images((fs::path(dir) / "train-images-idx3-ubyte").string(), train_imgs);
  write_idx_labels((fs::path(dir) / "train-labels-idx1-ubyte").string(), train_labels);
  write_idx_images((fs::path(dir) / "t10k-images-idx3-ubyte").string(), test_imgs);
  write_idx_labels((fs::path(dir) / "t10k-labels-idx1-ubyte").string(), test_labels);
}

}  // namespace ccep::data
