#include "ccep/data/tissue.hpp"

#include <algorithm>

#include "ccep/rng.hpp"

namespace ccep::data {

void rgb_to_hsv(double r, double g, double b, double& h, double& s, double& v) {
  double mx = std::max({r, g, b});
  double mn = std::min({r, g, b});
  double delta = mx - mn;
  v = mx;
  s = (mx > 0.0) ? delta / mx : 0.0;
  if (delta <= 0.0) {
    h = 0.0;
    return;
  }
  double hh;
  if (mx == r) {
    hh = (g - b) / delta;
    if (hh < 0.0) hh += 6.0;
  } else if (mx == g) {
    hh = (b - r) / delta + 2.0;
  } else {
    hh = (r - g) / delta + 4.0;
  }
  h = hh / 6.0;
}

bool is_tissue_pixel(double r, double g, double b, const TissueMaskParams& params) {
  double h, s, v;
  rgb_to_hsv(r, g, b, h, s, v);
  if (s <= params.sat_floor) return false;
  return h < params.hue_band_lo || h > params.hue_band_hi;
}

namespace {

// Remove 4-connected foreground components with area < min_region_area.
void drop_small_components(TissueMask& m) {
  const int h = m.height, w = m.width;
  std::vector<std::int32_t> label(static_cast<std::size_t>(h) * w, -1);
  std::vector<std::size_t> stack;
  std::int32_t next = 0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      std::size_t p = static_cast<std::size_t>(y) * w + x;
      if (m.mask[p] == 0 || label[p] >= 0) continue;
      // flood fill
      std::vector<std::size_t> members;
      stack.clear();
      stack.push_back(p);
      label[p] = next;
      while (!stack.empty()) {
        std::size_t q = stack.back();
        stack.pop_back();
        members.push_back(q);
        int qy = static_cast<int>(q) / w;
        int qx = static_cast<int>(q) % w;
        const int dy[4] = {-1, 1, 0, 0};
        const int dx[4] = {0, 0, -1, 1};
        for (int k = 0; k < 4; ++k) {
          int ny = qy + dy[k], nx = qx + dx[k];
          if (ny < 0 || ny >= h || nx < 0 || nx >= w) continue;
          std::size_t np = static_cast<std::size_t>(ny) * w + nx;
          if (m.mask[np] != 0 && label[np] < 0) {
            label[np] = next;
            stack.push_back(np);
          }
        }
      }
      if (static_cast<int>(members.size()) < m.min_region_area) {
        for (std::size_t q : members) m.mask[q] = 0;
      }
      ++next;
    }
  }
}

}  // namespace

TissueMask tissue_mask(const ImageInstance& image, const TissueMaskParams& params) {
  if (image.pixels.rank() != 3 || image.pixels.shape[2] != 3) {
    throw std::invalid_argument("tissue_mask: expected 3-channel RGB image, got " +
                                std::to_string(image.pixels.rank() == 3 ? image.pixels.shape[2] : 0) +
                                " channels");
  }
  const int h = image.pixels.shape[0], w = image.pixels.shape[1];
  TissueMask m;
  m.height = h;
  m.width = w;
  m.min_region_area = params.min_region_area;
  m.mask.assign(static_cast<std::size_t>(h) * w, 0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double r = image.pixels.at4(0, y, x, 0);
      double g = image.pixels.at4(0, y, x, 1);
      double b = image.pixels.at4(0, y, x, 2);
      m.mask[static_cast<std::size_t>(y) * w + x] =
          is_tissue_pixel(r, g, b, params) ? 1 : 0;
    }
  }
  drop_small_components(m);
  return m;
}

std::vector<ImageInstance> sample_patches(const ImageInstance& image, const TissueMask& mask,
                                          int count, int patch_size, std::uint64_t seed) {
  const int h = image.pixels.shape[0], w = image.pixels.shape[1];
  const int c = image.pixels.shape[2];
  if (c != 3) throw std::invalid_argument("sample_patches: expected RGB image");
  const int half = patch_size / 2;

  // Valid anchors: center on foreground, patch window inside the image.
  std::vector<std::pair<int, int>> anchors;
  for (int y = 0; y < h; ++y) {
    int top = y - half;
    if (top < 0 || top + patch_size > h) continue;
    for (int x = 0; x < w; ++x) {
      int left = x - half;
      if (left < 0 || left + patch_size > w) continue;
      if (mask.at(y, x)) anchors.emplace_back(y, x);
    }
  }
  if (anchors.empty()) {
    throw EmptyTissueError("sample_patches: no valid tissue anchors in " + image.id);
  }

  Rng rng(seed);
  std::vector<ImageInstance> patches;
  patches.reserve(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) {
    auto [cy, cx] = anchors[rng.uniform_index(anchors.size())];
    ImageInstance patch;
    patch.pixels = Tensor({patch_size, patch_size, 3});
    for (int y = 0; y < patch_size; ++y) {
      for (int x = 0; x < patch_size; ++x) {
        for (int ch = 0; ch < 3; ++ch) {
          patch.pixels.at4(0, y, x, ch) =
              image.pixels.at4(0, cy - half + y, cx - half + x, ch);
        }
      }
    }
    patch.true_label = image.true_label;
    patch.id = image.id + "#p" + std::to_string(k);
    patches.push_back(std::move(patch));
  }
  return patches;
}

}  // namespace ccep::data
