#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>

namespace insitu::sr {

enum class Variant { full, d1_no_encoding, d2_duf_style, d3_2d_conv };

std::string_view variant_name(Variant v);
/// Accepts the full names and the short forms full/d1/d2/d3.
Variant parse_variant(std::string_view name);

struct ViTSRConfig {
    std::size_t N = 1; // neighbour radius
    std::size_t r = 4;
    std::size_t n_cells = 4;
    std::size_t feat_channels = 32;
    Variant variant = Variant::full;
    bool channel_dot = false; // similarity summed over channels instead of elementwise
    double lr = 1e-4;
    std::size_t steps = 2000;
    std::uint64_t seed = 0;

    std::size_t window() const { return 2 * N + 1; }
    std::size_t subpixels() const { return r * r; }
    bool uses_encoding() const { return variant != Variant::d1_no_encoding; }
    bool uses_attention() const { return variant != Variant::d2_duf_style; }
    bool temporal_conv() const { return variant != Variant::d3_2d_conv; }

    /// UsageError on r < 2, n_cells < 1, feat_channels < 1 or lr <= 0.
    void validate() const;
};

/// INI text, keys N, r, n_cells, feat_channels, variant, lr, steps, seed
/// (plus channel_dot). Unknown keys are a UsageError.
ViTSRConfig parse_config(std::istream& in, ViTSRConfig base = {});
ViTSRConfig load_config(const std::filesystem::path& path, ViTSRConfig base = {});

} // namespace insitu::sr
