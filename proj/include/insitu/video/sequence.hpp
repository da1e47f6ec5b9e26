#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "insitu/video/color.hpp"

namespace insitu::video {

/// Default on-disk naming for frame sequences.
inline constexpr const char* kFramePattern = "frame_%06d.png";

std::string frame_filename(std::size_t index, const std::string& pattern = kFramePattern);

struct FrameSequence {
    std::vector<ColorFrame> frames;
    std::vector<std::size_t> indices; // parsed from filenames, ascending
    std::vector<std::string> ids;     // filenames
};

/// Loads every file matching `pattern` (a single %0Nd field) from
/// `directory`, ordered by index. Gaps in the index range and frames of
/// differing size are DataErrors; so is an empty directory.
FrameSequence load_frame_sequence(const std::filesystem::path& directory, const std::string& pattern = kFramePattern);

/// Lists the indices of pattern-matching files without decoding them.
std::vector<std::size_t> list_frame_indices(const std::filesystem::path& directory,
                                            const std::string& pattern = kFramePattern);

/// A (2N+1)-frame Y-channel clip centred on the reference frame.
struct FrameWindow {
    std::vector<Tensor> frames; // each [1, H, W] in [0, 1]
    std::size_t reference_index = 0;
    std::size_t scale_r = 1;
    std::vector<std::string> source_ids;

    std::size_t radius() const { return frames.size() / 2; }
    const Tensor& reference() const { return frames.at(reference_index); }
    std::size_t height() const { return frames.front().dim(1); }
    std::size_t width() const { return frames.front().dim(2); }
};

/// Lazily assembled windows, one per frame. Missing neighbours at either
/// end replicate the edge frame.
class WindowSequence {
public:
    WindowSequence(std::vector<Tensor> frames, std::size_t radius, std::size_t scale_r,
                   std::vector<std::string> ids = {});

    std::size_t size() const { return frames_.size(); }
    FrameWindow operator[](std::size_t t) const;

private:
    std::vector<Tensor> frames_;
    std::size_t radius_;
    std::size_t scale_r_;
    std::vector<std::string> ids_;
};

WindowSequence make_windows(std::vector<Tensor> frames, std::size_t radius, std::size_t scale_r = 1,
                            std::vector<std::string> ids = {});

} // namespace insitu::video
