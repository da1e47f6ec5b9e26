#pragma once

#include <cstddef>

#include "insitu/tensor/tensor.hpp"

namespace insitu::video {

using tensor::Tensor;

/// [C, rH, rW] -> [C, H, W] keeping the top-left sample of every r x r block.
Tensor downscale_nearest(const Tensor& frame, std::size_t r);

/// [C, H, W] -> [C, rH, rW] by pixel replication.
Tensor upscale_nearest(const Tensor& frame, std::size_t r);

/// [C, H, W] -> [C, rH, rW] with the a = -0.5 cubic kernel. Source sample
/// (y, x) lands on output (r*y, r*x), matching downscale_nearest.
Tensor upscale_bicubic(const Tensor& frame, std::size_t r);

} // namespace insitu::video
