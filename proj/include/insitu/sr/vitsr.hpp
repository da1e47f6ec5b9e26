#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "insitu/sr/config.hpp"
#include "insitu/tensor/checkpoint.hpp"
#include "insitu/tensor/layers.hpp"
#include "insitu/video/sequence.hpp"

namespace insitu::sr {

using tensor::BatchNormLayer;
using tensor::Conv3dLayer;
using tensor::Tensor;

/// 1x1 conv -> BN -> relu -> 3x3 conv -> BN -> relu.
struct ResidualCell {
    Conv3dLayer reduce;
    BatchNormLayer reduce_bn;
    Conv3dLayer conv;
    BatchNormLayer conv_bn;
};

/// 1x1 conv -> BN -> relu -> 3x3 conv to r^2 channels (no norm, no relu,
/// so the branch output keeps its sign).
struct FusionBranch {
    Conv3dLayer reduce;
    BatchNormLayer reduce_bn;
    Conv3dLayer conv;
};

/// Intermediate values of one forward pass. q/k/v are [r^2, T', H, W].
struct ForwardTrace {
    Tensor input;    // [C_in, T, H, W]
    Tensor features; // [feat, T, H, W]
    Tensor q, k, v;
    Tensor fused;   // [r^2, H, W]
    Tensor weights; // [r^2, 2N, H, W] fusion weights (attention variants)
    Tensor bicubic; // [1, rH, rW]
    Tensor output;  // [1, rH, rW]
};

class ViTSR {
public:
    /// Fresh He-initialized network seeded from `config.seed`.
    explicit ViTSR(const ViTSRConfig& config);

    const ViTSRConfig& config() const { return config_; }
    std::size_t input_channels() const { return config_.uses_encoding() ? 4 : 1; }

    /// `window` is [2N+1, H, W] of Y values; the reference is slice N.
    ForwardTrace trace(const Tensor& window, bool training);
    Tensor forward(const Tensor& window, bool training) { return trace(window, training).output; }

    /// Trainable tensors.
    std::vector<Tensor> parameters() const;
    std::size_t parameter_count() const;

    /// Every tensor incl. BN running statistics, with stable names.
    std::vector<std::pair<std::string, Tensor>> named_tensors() const;

    /// Checkpoint content: all named tensors plus meta.* config entries.
    std::vector<tensor::NamedTensor> state(tensor::DType dtype = tensor::DType::f64) const;
    static ViTSR from_state(const std::vector<tensor::NamedTensor>& state);
    void save(const std::filesystem::path& path) const;
    static ViTSR load(const std::filesystem::path& path);

    const std::vector<ResidualCell>& cells() const { return cells_; }
    const std::optional<FusionBranch>& q_branch() const { return q_; }
    const std::optional<FusionBranch>& k_branch() const { return k_; }
    const FusionBranch& v_branch() const { return v_; }
    const Tensor& mix() const { return mix_; }

private:
    ViTSRConfig config_;
    std::vector<ResidualCell> cells_;
    std::optional<FusionBranch> q_, k_;
    FusionBranch v_;
    Tensor mix_; // [r^2, 2N+1], d2 only
};

ViTSR build_variant(ViTSRConfig config, Variant variant);

/// Stacks a window's frames into [2N+1, H, W].
Tensor window_tensor(const video::FrameWindow& window);

/// Eval-mode forward without gradient recording.
Tensor super_resolve(ViTSR& model, const Tensor& window);

} // namespace insitu::sr
