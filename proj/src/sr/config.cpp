#include "insitu/sr/config.hpp"

#include <CLI11.hpp>

#include <fstream>

#include "insitu/errors.hpp"

namespace insitu::sr {

std::string_view variant_name(Variant v)
{
    switch (v) {
    case Variant::full: return "full";
    case Variant::d1_no_encoding: return "d1_no_encoding";
    case Variant::d2_duf_style: return "d2_duf_style";
    case Variant::d3_2d_conv: return "d3_2d_conv";
    }
    return "?";
}

Variant parse_variant(std::string_view name)
{
    if (name == "full") return Variant::full;
    if (name == "d1" || name == "d1_no_encoding") return Variant::d1_no_encoding;
    if (name == "d2" || name == "d2_duf_style") return Variant::d2_duf_style;
    if (name == "d3" || name == "d3_2d_conv") return Variant::d3_2d_conv;
    throw UsageError("unknown variant '" + std::string(name) + "' (expected full, d1, d2 or d3)");
}

void ViTSRConfig::validate() const
{
    if (r < 2) throw UsageError("config: r must be >= 2");
    if (n_cells < 1) throw UsageError("config: n_cells must be >= 1");
    if (feat_channels < 1) throw UsageError("config: feat_channels must be >= 1");
    if (!(lr > 0.0)) throw UsageError("config: lr must be positive");
}

namespace {

template <typename T>
T parse_number(const std::string& key, const std::string& text)
{
    T value{};
    if (!CLI::detail::lexical_conversion<T, T>({text}, value)) {
        throw UsageError("config: bad value '" + text + "' for " + key);
    }
    return value;
}

} // namespace

ViTSRConfig parse_config(std::istream& in, ViTSRConfig cfg)
{
    std::vector<CLI::ConfigItem> items;
    try {
        items = CLI::ConfigINI().from_config(in);
    } catch (const CLI::Error& e) {
        throw UsageError(std::string("config: ") + e.what());
    }
    for (const auto& item : items) {
        const std::string key = item.fullname();
        if (item.inputs.empty()) continue; // section markers
        const std::string& v = item.inputs.front();
        if (key == "N") {
            cfg.N = parse_number<std::size_t>(key, v);
        } else if (key == "r") {
            cfg.r = parse_number<std::size_t>(key, v);
        } else if (key == "n_cells") {
            cfg.n_cells = parse_number<std::size_t>(key, v);
        } else if (key == "feat_channels") {
            cfg.feat_channels = parse_number<std::size_t>(key, v);
        } else if (key == "variant") {
            cfg.variant = parse_variant(v);
        } else if (key == "lr") {
            cfg.lr = parse_number<double>(key, v);
        } else if (key == "steps") {
            cfg.steps = parse_number<std::size_t>(key, v);
        } else if (key == "seed") {
            cfg.seed = parse_number<std::uint64_t>(key, v);
        } else if (key == "channel_dot") {
            cfg.channel_dot = parse_number<bool>(key, v);
        } else {
            throw UsageError("config: unknown key '" + key + "'");
        }
    }
    cfg.validate();
    return cfg;
}

ViTSRConfig load_config(const std::filesystem::path& path, ViTSRConfig base)
{
    std::ifstream in(path);
    if (!in) throw UsageError("config: cannot open " + path.string());
    return parse_config(in, base);
}

} // namespace insitu::sr
