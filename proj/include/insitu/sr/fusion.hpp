#pragma once

#include <cstddef>

#include "insitu/tensor/tensor.hpp"

namespace insitu::sr {

using tensor::Tensor;

/// [3, T, H, W]: sin(x/W - 1/2), sin(y/H - 1/2), sin(i/T - 1/2).
Tensor positional_encoding(std::size_t height, std::size_t width, std::size_t frames);

struct Fusion {
    Tensor fused;   // [C, H, W]
    Tensor weights; // [C, K, H, W], detached
};

/// q [C, 1, H, W], k [C, K, H, W], v [C, K+1, H, W] with the reference at
/// v slice `ref`. fused = v_ref + sum_i softmax_i(q * k_i) v_i, the softmax
/// taken over the K neighbours independently per channel and pixel. With
/// `channel_dot` the similarity is summed over channels first.
Fusion vit_fusion(const Tensor& q, const Tensor& k, const Tensor& v, std::size_t ref, bool channel_dot = false);

/// v [C, T, H, W], mix [C, T] -> [C, H, W] = sum_t mix[c, t] v[c, t].
Tensor temporal_mix(const Tensor& v, const Tensor& mix);

/// [C, T, H, W] -> [T, H, W, C] copy, for reporting in frame-major order.
Tensor to_thwc(const Tensor& t);

} // namespace insitu::sr
