#pragma once

#include <cstddef>
#include <optional>

#include "insitu/tensor/tensor.hpp"
#include "insitu/video/png_io.hpp"

namespace insitu::video {

using tensor::Tensor;

/// Studio swing (Y in [16, 235], chroma in [16, 240] on the 0-255 scale) or
/// full-range JPEG-style coefficients.
enum class ColorRange { studio, full };

struct ColorFrame {
    Tensor rgb;                  // [3, H, W] in [0, 1]
    std::optional<Tensor> ycbcr; // [3, H, W] in [0, 1]
};

/// BT.601 RGB -> YCbCr, both in [0, 1]. Inputs outside [0, 1] are clamped
/// first and counted in `clamped` when given.
Tensor rgb_to_ycbcr(const Tensor& rgb, ColorRange range = ColorRange::studio, std::size_t* clamped = nullptr);

/// Exact matrix inverse of rgb_to_ycbcr, RGB clamped to [0, 1]; clamped
/// samples are counted in `clamped` when given.
Tensor ycbcr_to_rgb(const Tensor& ycbcr, ColorRange range = ColorRange::studio, std::size_t* clamped = nullptr);

/// Y plane [1, H, W] of an RGB frame.
Tensor luma(const Tensor& rgb, ColorRange range = ColorRange::studio);

/// 8-bit interleaved image -> [C, H, W] scaled by 1/255.
Tensor image_to_tensor(const Image8& image);

/// [C, H, W] -> 8-bit, clamped to [0, 1] and rounded half-up.
Image8 tensor_to_image(const Tensor& t);

std::uint8_t quantize_unit(double v);

} // namespace insitu::video
