#pragma once

#include <cstdint>
#include <random>

#include "insitu/tensor/kernels.hpp"
#include "insitu/tensor/tensor.hpp"

namespace insitu::tensor {

using Rng = std::mt19937_64;

/// Weights [out, in, kH, kW], bias [out]. Cross-correlation, no kernel flip.
struct Conv2dLayer {
    Tensor weight;
    Tensor bias;
    std::size_t stride = 1;
    std::size_t padding = 0;

    std::size_t in_channels() const { return weight.dim(1); }
    std::size_t out_channels() const { return weight.dim(0); }

    /// He-uniform weights, zero bias, "same" padding for odd kernels.
    static Conv2dLayer create(std::size_t in_ch, std::size_t out_ch, std::size_t kernel, Rng& rng);
};

/// Weights [out, in, kT, kH, kW], bias [out]. Temporal padding is set
/// independently of spatial padding.
struct Conv3dLayer {
    Tensor weight;
    Tensor bias;
    std::size_t stride_t = 1, stride_s = 1;
    std::size_t pad_t = 0, pad_s = 0;

    std::size_t in_channels() const { return weight.dim(1); }
    std::size_t out_channels() const { return weight.dim(0); }
    std::size_t kernel_t() const { return weight.dim(2); }
    std::size_t kernel_s() const { return weight.dim(3); }

    /// He-uniform weights, zero bias. Spatial padding is "same";
    /// `pad_t` is given explicitly (0 collapses the temporal axis).
    static Conv3dLayer create(std::size_t in_ch, std::size_t out_ch, std::size_t kernel_t, std::size_t kernel_s,
                              std::size_t pad_t, Rng& rng);
};

struct BatchNormLayer {
    Tensor gamma;
    Tensor beta;
    Tensor running_mean; // never requires grad
    Tensor running_var;
    double epsilon = 1e-5;
    double momentum = 0.1;

    std::size_t channels() const { return gamma.numel(); }

    static BatchNormLayer create(std::size_t channels);
};

kernels::ConvGeometry conv2d_geometry(const Shape& input, const Conv2dLayer& layer);
kernels::ConvGeometry conv3d_geometry(const Shape& input, const Conv3dLayer& layer);

/// [C, H, W] -> [C', H', W'] with H' = (H + 2p - k) / s + 1.
Tensor conv2d(const Tensor& input, const Conv2dLayer& layer);
/// [C, T, H, W] -> [C', T', H', W'].
Tensor conv3d(const Tensor& input, const Conv3dLayer& layer);

/// Normalizes over every axis but 0. In training mode uses the batch
/// statistics and updates the running estimates (unbiased variance).
Tensor batch_norm(const Tensor& input, BatchNormLayer& layer, bool training);

/// He-uniform fill: U(-b, b) with b = sqrt(6 / fan_in).
void he_uniform(Tensor& weight, std::size_t fan_in, Rng& rng);

} // namespace insitu::tensor
