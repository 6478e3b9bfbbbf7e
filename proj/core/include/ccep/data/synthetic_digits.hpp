// synthetic_digits.hpp - procedural 28x28 digit dataset.
//
// Renders stroke-based digit glyphs with per-sample affine jitter, style
// variants, shape perturbation and pixel noise. Serves as a self-contained
// stand-in for MNIST wherever the real IDX files are not on disk; written
// out in IDX format so the rest of the pipeline cannot tell the difference.

#pragma once

#include <cstdint>
#include <string>

#include "ccep/data/dataset.hpp"

namespace ccep::data {

struct DigitGenSpec {
  int per_class = 100;
  std::uint64_t seed = 1;
  double noise_sigma = 0.02;
  std::string id_prefix = "sd";
};

/// Balanced dataset: per_class samples for each digit 0..9, class-major order.
Dataset make_digit_dataset(const DigitGenSpec& spec);

/// Renders a single digit glyph into a 28x28 [0,1] grayscale tensor.
/// `style` selects between glyph variants (modulo the digit's style count).
Tensor render_digit(int digit, int style, double rotation, double scale, double shear,
                    double dx, double dy, double thickness, double jitter_seed);

/// Writes train/test IDX files (MNIST file names) into `dir`.
void write_digit_idx_files(const std::string& dir, int train_per_class, int test_per_class,
                           std::uint64_t seed, double noise_sigma = 0.02);

}  // namespace ccep::data
