#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace insitu::classical {

/// Row-major label map. 0 means unlabeled in marker input and watershed
/// line in output.
struct LabelMap {
    std::size_t width = 0, height = 0;
    std::vector<std::int32_t> labels;
};

/// Priority flood from the nonzero markers over `surface` (row-major,
/// width x height), 4-connected, FIFO among equal values. A pixel that is
/// reached from two different labels becomes line (0).
LabelMap watershed(std::span<const double> surface, const LabelMap& markers);

/// Central-difference gradient magnitude, one-sided at the borders.
std::vector<double> gradient_magnitude(std::span<const std::uint8_t> pixels, std::size_t width, std::size_t height);

/// Otsu background and foreground, each eroded twice with a 3x3 square
/// (fewer times if that would empty them). Background seeds get label 1,
/// object seeds label 2.
LabelMap auto_markers(std::span<const std::uint8_t> pixels, std::size_t width, std::size_t height);

/// Binary foreground (1 where the flood assigned the object label) from
/// auto markers on the gradient surface. Lines count as background.
std::vector<std::uint8_t> watershed_segment(std::span<const std::uint8_t> pixels, std::size_t width,
                                            std::size_t height);

} // namespace insitu::classical
