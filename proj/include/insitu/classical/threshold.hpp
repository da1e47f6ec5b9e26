#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace insitu::classical {

struct Histogram256 {
    std::array<std::uint64_t, 256> counts{};
    std::uint64_t total = 0;

    static Histogram256 of(std::span<const std::uint8_t> pixels);
    static Histogram256 from_counts(const std::array<std::uint64_t, 256>& counts);

    std::size_t populated_bins() const;
};

/// Relative tolerance under which two criterion values count as tied.
inline constexpr double kTieTolerance = 1e-12;

// All thresholds return t in [0, 255]; foreground is intensity > t.
// Degenerate histograms (fewer than two populated bins) raise DataError.

/// Maximizes the between-class variance.
int otsu_threshold(const Histogram256& hist);
/// Line from the peak to the far end of the longer tail (right on equal
/// extents); t is the bin farthest from it.
int triangle_threshold(const Histogram256& hist);
/// Kapur: maximizes the summed entropies of the two sub-histograms.
int max_entropy_threshold(const Histogram256& hist);

struct IterativeThreshold {
    double threshold = 0.0;
    std::size_t iterations = 0;
};

/// Iterates t <- (mean(<= t) + mean(> t)) / 2 from the global mean until
/// the update is below eps.
IterativeThreshold basic_global_threshold(const Histogram256& hist, double eps = 0.5);
IterativeThreshold basic_global_threshold(std::span<const std::uint8_t> pixels, double eps = 0.5);

/// 1 where pixel > t.
std::vector<std::uint8_t> segment_by_threshold(std::span<const std::uint8_t> pixels, double t);

} // namespace insitu::classical
