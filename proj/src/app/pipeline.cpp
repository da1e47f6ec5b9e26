#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <ostream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "insitu/app/commands.hpp"
#include "insitu/errors.hpp"
#include "insitu/video/color.hpp"
#include "insitu/video/png_io.hpp"
#include "insitu/video/sequence.hpp"

namespace insitu::app {

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct FrameResult {
    video::Image8 sr;
    seg::SegMask mask;
    std::optional<metrics::QualityReport> quality;
    double sr_s = 0.0, seg_s = 0.0;
};

fs::path lr_dir(const PipelineConfig& c) { return fs::is_directory(c.input / "lr") ? c.input / "lr" : c.input; }

std::optional<fs::path> gt_dir(const PipelineConfig& c)
{
    if (c.reference) return c.reference;
    if (fs::is_directory(c.input / "gt")) return c.input / "gt";
    return std::nullopt;
}

void require_checkpoint(const fs::path& p, const char* what, const char* command)
{
    if (p.empty()) throw UsageError(std::string("pipeline: no ") + what + " checkpoint given");
    if (!fs::is_regular_file(p)) {
        throw DataError("pipeline: " + std::string(what) + " checkpoint " + p.string() +
                        " not found; create it with `insitu " + command + "`");
    }
}

std::string canonical_config(const PipelineConfig& c, const sr::ViTSR& model, const std::string& sr_hash,
                             const std::string& seg_hash, const seg::FCNConfig& fcn)
{
    const auto& m = model.config();
    std::ostringstream s;
    s << "input=" << c.input.generic_string() << "\n"
      << "reference=" << (c.reference ? c.reference->generic_string() : "") << "\n"
      << "sr_checkpoint=" << sr_hash << "\n"
      << "seg_checkpoint=" << seg_hash << "\n"
      << "seed=" << c.seed << "\n"
      << "deterministic=" << c.deterministic << "\n"
      << "peak=" << c.peak << "\n"
      << "N=" << m.N << "\nr=" << m.r << "\nn_cells=" << m.n_cells << "\nfeat_channels=" << m.feat_channels
      << "\nvariant=" << sr::variant_name(m.variant) << "\nchannel_dot=" << m.channel_dot << "\n"
      << "fcn_channels=" << fcn.channels[0] << "," << fcn.channels[1] << "," << fcn.channels[2] << "\n";
    return s.str();
}

} // namespace

void PipelineConfig::validate() const
{
    std::vector<std::pair<std::string, fs::path>> paths{
        {"input", input}, {"output", output}, {"sr checkpoint", sr_checkpoint}, {"seg checkpoint", seg_checkpoint}};
    if (reference) paths.emplace_back("reference", *reference);
    for (const auto& [name, p] : paths) {
        if (p.empty() && name != "reference") throw UsageError("pipeline: " + name + " path is required");
    }
    for (std::size_t i = 0; i < paths.size(); ++i) {
        for (std::size_t j = i + 1; j < paths.size(); ++j) {
            if (fs::weakly_canonical(paths[i].second) == fs::weakly_canonical(paths[j].second)) {
                throw UsageError("pipeline: " + paths[i].first + " and " + paths[j].first + " are the same path " +
                                 paths[i].second.string());
            }
        }
    }
    if (!(peak > 0.0)) throw UsageError("pipeline: peak must be positive");
}

StageTimes run_pipeline(const PipelineConfig& c)
{
    c.validate();
    const auto t_start = Clock::now();
    require_checkpoint(c.sr_checkpoint, "SR", "train-sr");
    require_checkpoint(c.seg_checkpoint, "segmentation", "train-seg");
    auto sr_model = sr::ViTSR::load(c.sr_checkpoint);
    auto fcn = seg::FCN::load(c.seg_checkpoint);
    const auto sr_hash = fnv1a_hex(read_file(c.sr_checkpoint));
    const auto seg_hash = fnv1a_hex(read_file(c.seg_checkpoint));

    const auto lr = video::load_frame_sequence(lr_dir(c));
    std::optional<video::FrameSequence> gt;
    if (const auto g = gt_dir(c)) {
        gt = video::load_frame_sequence(*g);
        if (gt->ids != lr.ids) throw DataError("pipeline: " + g->string() + " does not hold the same frames as the input");
    }
    const std::size_t n = lr.frames.size();
    const std::size_t r = sr_model.config().r;
    if (gt && (gt->frames[0].rgb.dim(1) != r * lr.frames[0].rgb.dim(1) ||
               gt->frames[0].rgb.dim(2) != r * lr.frames[0].rgb.dim(2))) {
        throw DataError("pipeline: reference frames are not " + std::to_string(r) + "x the input size");
    }
    StageTimes times;
    times.frames = n;
    times.load_s = since(t_start);

    std::vector<FrameResult> results(n);
    auto process = [&](std::size_t t) {
        auto& res = results[t];
        auto t0 = Clock::now();
        res.sr = video::tensor_to_image(super_resolve_frame(sr_model, lr.frames, t).rgb);
        const auto y = video::luma(video::image_to_tensor(res.sr));
        res.sr_s = since(t0);
        t0 = Clock::now();
        res.mask = seg::segment_padded(fcn, y);
        res.mask.logits.reset();
        res.seg_s = since(t0);
        if (gt) res.quality = metrics::evaluate(lr.ids[t], y, video::luma(gt->frames[t].rgb), c.peak);
    };

    std::size_t threads = 1;
    if (!c.deterministic) {
        threads = c.threads ? c.threads : std::max(1u, std::thread::hardware_concurrency());
        threads = std::min(threads, n);
    }
    if (threads <= 1) {
        for (std::size_t t = 0; t < n; ++t) process(t);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::exception_ptr> errors(threads);
        std::vector<std::thread> pool;
        for (std::size_t k = 0; k < threads; ++k) {
            pool.emplace_back([&, k] {
                try {
                    for (std::size_t t; (t = next++) < n;) process(t);
                } catch (...) {
                    errors[k] = std::current_exception();
                }
            });
        }
        for (auto& th : pool) th.join();
        for (const auto& e : errors) {
            if (e) std::rethrow_exception(e);
        }
    }

    const auto t_write = Clock::now();
    std::ostringstream areas;
    areas << "frame_index,molten_pool_px,plasma_arc_px\n";
    std::vector<metrics::QualityReport> quality;
    fs::create_directories(c.output / "sr");
    fs::create_directories(c.output / "masks");
    for (std::size_t t = 0; t < n; ++t) {
        auto& res = results[t];
        video::write_png(c.output / "sr" / lr.ids[t], res.sr);
        seg::write_mask_png(c.output / "masks" / lr.ids[t], res.mask);
        const auto a = seg::extract_areas(res.mask);
        areas << lr.indices[t] << "," << a.molten_pool_px << "," << a.plasma_arc_px << "\n";
        if (res.quality) quality.push_back(*res.quality);
        times.sr_s += res.sr_s;
        times.seg_s += res.seg_s;
    }
    write_text(c.output / "areas.csv", areas.str());
    if (gt) write_text(c.output / "quality.csv", quality_csv(quality));

    const auto& m = sr_model.config();
    nlohmann::ordered_json manifest;
    manifest["tool"] = "insitu";
    manifest["version"] = kVersion;
    manifest["config_hash"] = fnv1a_hex(canonical_config(c, sr_model, sr_hash, seg_hash, fcn.config()));
    manifest["seed"] = c.seed;
    manifest["deterministic"] = c.deterministic;
    manifest["input"] = c.input.generic_string();
    manifest["reference"] = gt ? gt_dir(c)->generic_string() : "";
    manifest["frames"] = n;
    manifest["lr_size"] = {lr.frames[0].rgb.dim(1), lr.frames[0].rgb.dim(2)};
    manifest["sr_checkpoint"] = {{"path", c.sr_checkpoint.generic_string()}, {"fnv1a", sr_hash}};
    manifest["seg_checkpoint"] = {{"path", c.seg_checkpoint.generic_string()}, {"fnv1a", seg_hash}};
    manifest["sr_model"] = {{"N", m.N},
                            {"r", m.r},
                            {"n_cells", m.n_cells},
                            {"feat_channels", m.feat_channels},
                            {"variant", sr::variant_name(m.variant)},
                            {"channel_dot", m.channel_dot}};
    const auto& ch = fcn.config().channels;
    manifest["fcn_channels"] = {ch[0], ch[1], ch[2]};
    manifest["outputs"] = gt ? nlohmann::ordered_json{"sr/", "masks/", "areas.csv", "quality.csv"}
                             : nlohmann::ordered_json{"sr/", "masks/", "areas.csv"};
    write_text(c.output / "manifest.json", manifest.dump(2) + "\n");

    times.write_s = since(t_write);
    times.total_s = since(t_start);
    return times;
}

int cmd_pipeline(const PipelineConfig& c, std::ostream& log)
{
    const auto t = run_pipeline(c);
    const double per = t.frames ? 1000.0 / static_cast<double>(t.frames) : 0.0;
    char buf[320];
    std::snprintf(buf, sizeof buf,
                  "%zu frames in %.2f s (load %.2f s, write %.2f s)\n"
                  "per frame: super resolution %.2f ms, segmentation %.2f ms\n",
                  t.frames, t.total_s, t.load_s, t.write_s, t.sr_s * per, t.seg_s * per);
    log << buf << "outputs in " << c.output.string() << "\n";
    return 0;
}

} // namespace insitu::app
