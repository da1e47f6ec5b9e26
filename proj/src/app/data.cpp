#include "insitu/app/data.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "insitu/errors.hpp"
#include "insitu/video/color.hpp"
#include "insitu/video/png_io.hpp"
#include "insitu/video/sequence.hpp"

namespace insitu::app {

Tensor read_y(const fs::path& path)
{
    return video::luma(video::image_to_tensor(video::read_png(path, 3)));
}

namespace {

std::vector<Tensor> load_y_dir(const fs::path& dir, std::vector<std::string>* ids)
{
    auto seq = video::load_frame_sequence(dir);
    std::vector<Tensor> out;
    out.reserve(seq.frames.size());
    for (const auto& f : seq.frames) out.push_back(video::luma(f.rgb));
    if (ids) *ids = seq.ids;
    return out;
}

Clip load_clip(const fs::path& dir)
{
    Clip c;
    c.name = dir.filename().string();
    c.lr = load_y_dir(dir / "lr", &c.ids);
    if (fs::is_directory(dir / "gt")) {
        c.gt = load_y_dir(dir / "gt", nullptr);
        if (c.gt.size() != c.lr.size()) {
            throw DataError(dir.string() + ": " + std::to_string(c.gt.size()) + " gt frames but " +
                            std::to_string(c.lr.size()) + " lr frames");
        }
    }
    return c;
}

} // namespace

std::vector<Clip> load_clips(const fs::path& root)
{
    if (!fs::is_directory(root)) throw DataError(root.string() + ": not a directory");
    if (fs::is_directory(root / "lr")) return {load_clip(root)};
    std::vector<fs::path> dirs;
    for (const auto& e : fs::directory_iterator(root)) {
        if (e.is_directory() && e.path().filename().string().rfind("clip_", 0) == 0) dirs.push_back(e.path());
    }
    if (dirs.empty()) throw DataError(root.string() + ": no lr/ directory and no clip_* directories");
    std::sort(dirs.begin(), dirs.end());
    std::vector<Clip> clips;
    clips.reserve(dirs.size());
    for (const auto& d : dirs) clips.push_back(load_clip(d));
    return clips;
}

std::vector<sr::SRSample> sr_samples(const std::vector<Clip>& clips, std::size_t N)
{
    std::vector<sr::SRSample> out;
    for (const auto& c : clips) {
        if (c.gt.empty()) throw DataError(c.name + ": no gt frames to train or evaluate against");
        const auto windows = video::make_windows(c.lr, N);
        for (std::size_t t = 0; t < windows.size(); ++t) out.push_back({sr::window_tensor(windows[t]), c.gt[t]});
    }
    return out;
}

std::vector<seg::SegSample> load_seg_dataset(const fs::path& root)
{
    std::vector<std::string> ids;
    auto frames = load_y_dir(root / "frames", &ids);
    std::vector<seg::SegSample> out;
    out.reserve(frames.size());
    for (std::size_t i = 0; i < frames.size(); ++i) {
        const auto mask_path = root / "masks" / ids[i];
        if (!fs::exists(mask_path)) throw DataError(mask_path.string() + ": missing mask");
        auto mask = seg::read_mask_png(mask_path);
        if (mask.height != frames[i].dim(1) || mask.width != frames[i].dim(2)) {
            throw DataError(mask_path.string() + ": mask size differs from its frame");
        }
        out.push_back({std::move(frames[i]), std::move(mask.labels)});
    }
    return out;
}

void write_y_png(const fs::path& path, const Tensor& y)
{
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    video::write_png(path, video::tensor_to_image(y));
}

void write_text(const fs::path& path, const std::string& text)
{
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    f << text;
    if (!f) throw DataError(path.string() + ": cannot write");
}

std::string fnv1a_hex(std::string_view bytes)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string read_file(const fs::path& path)
{
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError(path.string() + ": cannot read");
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

} // namespace insitu::app
