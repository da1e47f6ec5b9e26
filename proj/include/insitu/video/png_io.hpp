#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace insitu::video {

/// Interleaved 8-bit image, 1 (gray) or 3 (RGB) channels.
struct Image8 {
    std::size_t width = 0;
    std::size_t height = 0;
    std::size_t channels = 1;
    std::vector<std::uint8_t> pixels;

    std::uint8_t& at(std::size_t y, std::size_t x, std::size_t c = 0) { return pixels[(y * width + x) * channels + c]; }
    std::uint8_t at(std::size_t y, std::size_t x, std::size_t c = 0) const
    {
        return pixels[(y * width + x) * channels + c];
    }
};

using Rgb8 = std::array<std::uint8_t, 3>;

/// Reads any PNG, converted to 8-bit gray (channels = 1) or RGB (channels = 3).
Image8 read_png(const std::filesystem::path& path, std::size_t channels = 3);

/// Writes an 8-bit gray or RGB PNG.
void write_png(const std::filesystem::path& path, const Image8& image);

/// Writes an indexed-colour PNG; `indices` has width * height entries, each
/// below palette.size().
void write_indexed_png(const std::filesystem::path& path, std::size_t width, std::size_t height,
                       const std::vector<std::uint8_t>& indices, const std::vector<Rgb8>& palette);

} // namespace insitu::video
