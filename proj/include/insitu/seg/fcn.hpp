#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "insitu/tensor/checkpoint.hpp"
#include "insitu/tensor/layers.hpp"
#include "insitu/tensor/optim.hpp"

namespace insitu::seg {

using tensor::Tensor;

enum Label : std::uint8_t { background = 0, molten_pool = 1, plasma_arc = 2 };
inline constexpr std::size_t kClasses = 3;

struct SegMask {
    std::size_t height = 0, width = 0;
    std::vector<std::uint8_t> labels; // row-major class ids
    std::optional<Tensor> logits;     // [3, H, W]
};

/// conv3x3 -> BN -> relu
struct ConvUnit {
    tensor::Conv2dLayer conv;
    tensor::BatchNormLayer bn;
};

/// Two conv units at one resolution.
struct Stage {
    ConvUnit first, second;
};

struct FCNConfig {
    std::array<std::size_t, 3> channels{16, 32, 64};
    std::uint64_t seed = 0;
};

/// U-shaped FCN: three (stage, 2x max-pool) encoder steps, then three
/// (nearest 2x upsample, skip concat, stage) decoder steps and a 1x1 head.
class FCN {
public:
    explicit FCN(const FCNConfig& config = {});

    const FCNConfig& config() const { return config_; }

    /// [1, H, W] -> logits [3, H, W]. H and W must be multiples of 8.
    Tensor logits(const Tensor& frame, bool training);

    std::vector<Tensor> parameters() const;
    std::size_t parameter_count() const;
    std::vector<std::pair<std::string, Tensor>> named_tensors() const;

    std::vector<tensor::NamedTensor> state(tensor::DType dtype = tensor::DType::f64) const;
    static FCN from_state(const std::vector<tensor::NamedTensor>& state);
    void save(const std::filesystem::path& path) const;
    static FCN load(const std::filesystem::path& path);

    const std::array<Stage, 3>& encoder() const { return encoder_; }
    const std::array<Stage, 3>& decoder() const { return decoder_; }
    const tensor::Conv2dLayer& head() const { return head_; }

private:
    FCNConfig config_;
    std::array<Stage, 3> encoder_;
    std::array<Stage, 3> decoder_;
    tensor::Conv2dLayer head_;
};

/// Argmax over classes, ties to the lower id.
SegMask mask_from_logits(const Tensor& logits);

/// Eval-mode segmentation. ShapeError unless H and W are multiples of 8.
SegMask segment(FCN& model, const Tensor& frame);

/// Replicates the bottom/right edge up to the next multiple of 8, segments,
/// and crops back.
SegMask segment_padded(FCN& model, const Tensor& frame);

struct Areas {
    std::size_t molten_pool_px = 0;
    std::size_t plasma_arc_px = 0;
};

Areas extract_areas(const SegMask& mask);

/// Fraction of equal labels.
double pixel_accuracy(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b);

/// Indexed PNG with palette 0 black, 1 red, 2 blue.
void write_mask_png(const std::filesystem::path& path, const SegMask& mask);
/// Reads a mask written by write_mask_png; other colours are a DataError.
SegMask read_mask_png(const std::filesystem::path& path);

struct SegSample {
    Tensor frame;                     // [1, H, W]
    std::vector<std::uint8_t> labels; // H * W ids in {0, 1, 2}
};

class SegTrainer {
public:
    SegTrainer(FCN& model, double lr);

    /// Mean pixel cross-entropy over the batch, then one Adam update.
    double step(std::span<const SegSample> batch);

private:
    FCN& model_;
    tensor::Adam adam_;
};

} // namespace insitu::seg
