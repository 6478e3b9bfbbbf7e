// png_io.hpp - 8-bit PNG read/write for synthetic images and bag renders.

#pragma once

#include <string>

#include "ccep/data/dataset.hpp"

namespace ccep::data {

/// Reads an 8-bit PNG as an HWC tensor in [0,1]. Grayscale stays 1-channel,
/// everything else is expanded/stripped to RGB.
Tensor read_png(const std::string& path);

/// Writes an HWC tensor ([0,1], 1 or 3 channels) as an 8-bit PNG.
void write_png(const std::string& path, const Tensor& image);

}  // namespace ccep::data
