#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "insitu/seg/fcn.hpp"
#include "insitu/sr/train.hpp"

namespace insitu::app {

namespace fs = std::filesystem;
using tensor::Tensor;

/// Y plane [1, H, W] of a PNG (gray files count as R = G = B).
Tensor read_y(const fs::path& path);

/// An HR/LR frame pair set: `gt` and `lr` sequences of equal length.
struct Clip {
    std::string name;
    std::vector<Tensor> gt, lr; // Y planes
    std::vector<std::string> ids;
};

/// Either one clip (root/gt and root/lr) or every root/clip_* holding such a
/// pair, in name order. A clip without gt/ is loaded with empty `gt`.
std::vector<Clip> load_clips(const fs::path& root);

/// One training sample per frame (boundary windows replicate edge frames).
std::vector<sr::SRSample> sr_samples(const std::vector<Clip>& clips, std::size_t N);

/// frames/ and masks/ as written by the synth command.
std::vector<seg::SegSample> load_seg_dataset(const fs::path& root);

/// Final image export: Y clamped to [0, 1], quantized, written as gray PNG.
void write_y_png(const fs::path& path, const Tensor& y);

/// Writes `text` to `path`, creating parent directories.
void write_text(const fs::path& path, const std::string& text);

/// Lower-case hex FNV-1a 64 of `bytes`.
std::string fnv1a_hex(std::string_view bytes);

/// Reads a whole file; DataError naming it when unreadable.
std::string read_file(const fs::path& path);

} // namespace insitu::app
