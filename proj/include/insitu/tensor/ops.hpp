#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "insitu/tensor/tensor.hpp"

namespace insitu::tensor {

// Elementwise arithmetic. Shapes must match exactly (no broadcasting).
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
Tensor square(const Tensor& a);
Tensor relu(const Tensor& a);

// Reductions to a [1] tensor.
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
/// mean((a - b)^2).
Tensor mse_loss(const Tensor& prediction, const Tensor& target);

Tensor reshape(const Tensor& a, Shape shape);
/// Elements [begin, end) along `axis`.
Tensor slice(const Tensor& a, std::size_t axis, std::size_t begin, std::size_t end);
Tensor concat(const std::vector<Tensor>& parts, std::size_t axis);

/// Constant padding; `spec[i]` = (before, after) for axis i. A shorter spec
/// pads only the trailing axes.
using PadSpec = std::vector<std::pair<std::size_t, std::size_t>>;
Tensor pad(const Tensor& a, const PadSpec& spec, double value = 0.0);

/// Max-subtracted softmax along `axis`.
Tensor softmax(const Tensor& scores, std::size_t axis);

/// [C*r*r, H, W] -> [C, r*H, r*W].
Tensor pixel_shuffle(const Tensor& a, std::size_t r);
/// [C, r*H, r*W] -> [C*r*r, H, W].
Tensor pixel_unshuffle(const Tensor& a, std::size_t r);

/// 2x2 stride-2 max pooling over [C, H, W]; H and W must be even.
Tensor max_pool2(const Tensor& a);
/// Nearest-neighbour upsampling of [C, H, W] by an integer factor.
Tensor upsample_nearest(const Tensor& a, std::size_t factor);

/// Mean per-pixel cross-entropy of logits [K, H, W] against class ids [H*W].
Tensor cross_entropy(const Tensor& logits, std::span<const std::uint8_t> labels);

} // namespace insitu::tensor
