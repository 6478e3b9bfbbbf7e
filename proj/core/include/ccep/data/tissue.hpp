// tissue.hpp - hue-threshold tissue masks and random patch extraction.
//
// Patch-mode preprocessing for RGB slide crops: convert to HSV, keep pixels
// whose hue falls outside the configured background band with saturation
// above a floor, then drop connected components smaller than
// min_region_area (4-connectivity). Patches are sampled with their centers
// restricted to mask foreground.

#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "ccep/data/dataset.hpp"

namespace ccep::data {

struct TissueMask {
  std::vector<std::uint8_t> mask;  // height*width, 1 = foreground
  int height = 0;
  int width = 0;
  int min_region_area = 0;

  bool at(int y, int x) const { return mask[static_cast<std::size_t>(y) * width + x] != 0; }
};

struct TissueMaskParams {
  // Background = hue inside [hue_band_lo, hue_band_hi] or saturation <= sat_floor.
  double hue_band_lo = 0.25;
  double hue_band_hi = 0.45;
  double sat_floor = 0.05;
  int min_region_area = 64;
};

struct EmptyTissueError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// RGB in [0,1] -> (h, s, v), h in [0,1).
void rgb_to_hsv(double r, double g, double b, double& h, double& s, double& v);

/// Foreground test for a single pixel under `params` (exposed so oracles and
/// callers share one definition of the band).
bool is_tissue_pixel(double r, double g, double b, const TissueMaskParams& params);

TissueMask tissue_mask(const ImageInstance& image, const TissueMaskParams& params);

/// Exactly `count` patch_size x patch_size x 3 crops whose center pixel lies
/// on mask foreground and which fit inside the image. Sampling is uniform
/// over valid anchors, with replacement, deterministic for a given seed.
std::vector<ImageInstance> sample_patches(const ImageInstance& image, const TissueMask& mask,
                                          int count, int patch_size, std::uint64_t seed);

}  // namespace ccep::data
