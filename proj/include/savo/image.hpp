#pragma once

#include <cstdint>
#include <string>

#include "savo/tensor.hpp"

namespace savo::img {

/// Decodes any common image format to an RGB tensor (3, H, W) with values
/// in [0, 255]. Throws an I/O error naming the path on failure.
Tensor load_rgb(const std::string& path);

/// Writes an RGB tensor (3, H, W) as PNG, clamping values to [0, 255].
void save_rgb_png(const std::string& path, const Tensor& rgb);

/// Loads a single-channel category-id map (8-bit PNG, pixel value = id)
/// as an (H, W) tensor. Multi-channel files are rejected.
Tensor load_label_map(const std::string& path);

/// Bilinear resize of a (C, H, W) tensor using half-pixel sample centers,
/// so shrinking a 2x2 block to 1x1 yields the 4-pixel mean.
Tensor bilinear_resize(const Tensor& x, int64_t out_h, int64_t out_w);

/// Resize to the model input size and map [0, 255] to [-0.5, 0.5].
Tensor preprocess(const Tensor& rgb, int64_t out_h, int64_t out_w);

}  // namespace savo::img
