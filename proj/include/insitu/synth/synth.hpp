#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "insitu/tensor/tensor.hpp"

namespace insitu::synth {

using tensor::Tensor;

struct MotionOptions {
    std::size_t frames = 8;
    std::size_t size = 128; // HR edge length
    std::size_t blobs = 90;
};

/// One clip of gray HR frames [1, size, size], already quantized to 8-bit
/// levels: small Gaussian blobs over a shaded, finely speckled bed, all
/// translating together; a swaying arc glow and a dimmer pool glow near fixed
/// positions; global flicker and vignetting.
std::vector<Tensor> motion_clip(std::uint64_t seed, std::size_t clip, const MotionOptions& options = {});

struct MeltpoolOptions {
    std::size_t size = 64;
    bool halo = true;
};

struct MeltpoolFrame {
    Tensor frame;                     // [1, size, size], 8-bit levels
    std::vector<std::uint8_t> labels; // 0 background, 1 molten pool, 2 plasma arc
};

/// Bright arc ellipse above a dimmer textured pool ellipse on a speckled
/// bed, with bright spatter specks and (optionally) a glow halo around the
/// arc. Labels are the exact ellipse memberships.
MeltpoolFrame meltpool_frame(std::uint64_t seed, std::size_t index, const MeltpoolOptions& options = {});

/// Writes `count` motion clips as <out>/clip_NNNN/{gt,lr}/frame_*.png plus a
/// pairs.csv per clip.
void write_motion_dataset(const std::filesystem::path& out, std::size_t count, std::uint64_t seed,
                          std::size_t scale_r = 4, const MotionOptions& options = {});

/// Writes `count` frames to <out>/frames and <out>/masks (indexed PNG).
void write_meltpool_dataset(const std::filesystem::path& out, std::size_t count, std::uint64_t seed,
                            const MeltpoolOptions& options = {});

} // namespace insitu::synth
