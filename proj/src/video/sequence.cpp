#include "insitu/video/sequence.hpp"

#include <algorithm>
#include <cstdio>
#include <regex>

#include "insitu/video/png_io.hpp"

namespace insitu::video {

namespace {

std::regex pattern_regex(const std::string& pattern)
{
    static const std::regex field(R"(%0?(\d*)d)");
    std::smatch m;
    if (!std::regex_search(pattern, m, field)) throw UsageError("frame pattern needs a %d field: " + pattern);
    auto escape = [](const std::string& s) { return std::regex_replace(s, std::regex(R"([.^$|()\[\]{}*+?\\])"), R"(\$&)"); };
    const std::string digits = m[1].length() ? "(\\d{" + m[1].str() + ",})" : "(\\d+)";
    return std::regex(escape(m.prefix().str()) + digits + escape(m.suffix().str()));
}

} // namespace

std::string frame_filename(std::size_t index, const std::string& pattern)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, pattern.c_str(), static_cast<int>(index));
    return buf;
}

std::vector<std::size_t> list_frame_indices(const std::filesystem::path& directory, const std::string& pattern)
{
    if (!std::filesystem::is_directory(directory)) throw DataError("not a directory: " + directory.string());
    const auto re = pattern_regex(pattern);
    std::vector<std::size_t> indices;
    for (const auto& entry : std::filesystem::directory_iterator(directory)) {
        std::smatch m;
        const std::string name = entry.path().filename().string();
        if (entry.is_regular_file() && std::regex_match(name, m, re)) indices.push_back(std::stoul(m[1].str()));
    }
    std::sort(indices.begin(), indices.end());
    return indices;
}

FrameSequence load_frame_sequence(const std::filesystem::path& directory, const std::string& pattern)
{
    const auto indices = list_frame_indices(directory, pattern);
    if (indices.empty()) throw DataError("no frames matching " + pattern + " in " + directory.string());
    for (std::size_t i = 1; i < indices.size(); ++i) {
        if (indices[i] != indices[i - 1] + 1) {
            throw DataError("frame sequence in " + directory.string() + " has a gap: missing index " +
                            std::to_string(indices[i - 1] + 1));
        }
    }
    FrameSequence seq;
    seq.indices = indices;
    for (auto idx : indices) {
        const std::string name = frame_filename(idx, pattern);
        auto img = read_png(directory / name, 3);
        if (!seq.frames.empty()) {
            const auto& first = seq.frames.front().rgb;
            if (first.dim(1) != img.height || first.dim(2) != img.width) {
                throw DataError("frame " + name + " is " + std::to_string(img.width) + "x" + std::to_string(img.height) +
                                ", expected " + std::to_string(first.dim(2)) + "x" + std::to_string(first.dim(1)));
            }
        }
        seq.frames.push_back({image_to_tensor(img), std::nullopt});
        seq.ids.push_back(name);
    }
    return seq;
}

WindowSequence::WindowSequence(std::vector<Tensor> frames, std::size_t radius, std::size_t scale_r,
                               std::vector<std::string> ids)
    : frames_(std::move(frames)), radius_(radius), scale_r_(scale_r), ids_(std::move(ids))
{
    if (frames_.empty()) throw DataError("make_windows: empty frame sequence");
    if (!ids_.empty() && ids_.size() != frames_.size()) throw UsageError("make_windows: ids do not match frames");
    for (const auto& f : frames_) {
        if (f.shape() != frames_.front().shape() || f.rank() != 3 || f.dim(0) != 1) {
            throw ShapeError("make_windows: frames must all be [1, H, W] of one size, got " + tensor::shape_str(f.shape()));
        }
    }
}

FrameWindow WindowSequence::operator[](std::size_t t) const
{
    if (t >= frames_.size()) throw UsageError("window index out of range");
    FrameWindow w;
    w.reference_index = radius_;
    w.scale_r = scale_r_;
    const long n = static_cast<long>(frames_.size());
    for (long d = -static_cast<long>(radius_); d <= static_cast<long>(radius_); ++d) {
        const auto src = static_cast<std::size_t>(std::clamp(static_cast<long>(t) + d, 0L, n - 1));
        w.frames.push_back(frames_[src]);
        w.source_ids.push_back(ids_.empty() ? std::to_string(src) : ids_[src]);
    }
    return w;
}

WindowSequence make_windows(std::vector<Tensor> frames, std::size_t radius, std::size_t scale_r,
                            std::vector<std::string> ids)
{
    return WindowSequence(std::move(frames), radius, scale_r, std::move(ids));
}

} // namespace insitu::video
