#include "insitu/app/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

#include "insitu/classical/segment.hpp"
#include "insitu/errors.hpp"
#include "insitu/synth/synth.hpp"
#include "insitu/tensor/ops.hpp"
#include "insitu/video/color.hpp"
#include "insitu/video/png_io.hpp"
#include "insitu/video/resample.hpp"
#include "insitu/video/sequence.hpp"

namespace insitu::app {

namespace {

std::string fmt(double v)
{
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

std::vector<fs::path> png_files(const fs::path& dir)
{
    if (!fs::is_directory(dir)) throw DataError(dir.string() + ": not a directory");
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.is_regular_file() && e.path().extension() == ".png") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    return files;
}

video::Image8 downscale_image(const video::Image8& in, std::size_t r)
{
    if (in.width % r != 0 || in.height % r != 0) {
        throw ShapeError(std::to_string(in.width) + "x" + std::to_string(in.height) + " is not divisible by r = " +
                         std::to_string(r));
    }
    video::Image8 out;
    out.width = in.width / r;
    out.height = in.height / r;
    out.channels = in.channels;
    out.pixels.resize(out.width * out.height * out.channels);
    for (std::size_t y = 0; y < out.height; ++y) {
        for (std::size_t x = 0; x < out.width; ++x) {
            for (std::size_t c = 0; c < out.channels; ++c) out.at(y, x, c) = in.at(r * y, r * x, c);
        }
    }
    return out;
}

bool is_gray(const video::Image8& rgb)
{
    for (std::size_t i = 0; i < rgb.pixels.size(); i += 3) {
        if (rgb.pixels[i] != rgb.pixels[i + 1] || rgb.pixels[i] != rgb.pixels[i + 2]) return false;
    }
    return true;
}

Tensor channel(const Tensor& t, std::size_t c) { return tensor::slice(t, 0, c, c + 1); }

Tensor levels8(const Tensor& y)
{
    std::vector<double> v(y.numel());
    auto src = y.data();
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = video::quantize_unit(src[i]);
    return Tensor::from(y.shape(), std::move(v));
}

} // namespace

int cmd_synth(const SynthOptions& o, std::ostream& log)
{
    if (o.out.empty()) throw UsageError("synth: --out is required");
    if (o.kind == "motion") {
        synth::MotionOptions m;
        m.frames = o.frames;
        if (o.size) m.size = o.size;
        if (o.r < 1 || m.size % o.r != 0) throw UsageError("synth: size must be divisible by r");
        synth::write_motion_dataset(o.out, o.count, o.seed, o.r, m);
        log << "wrote " << o.count << " motion clips of " << m.frames << " frames to " << o.out.string() << "\n";
    } else if (o.kind == "meltpool") {
        synth::MeltpoolOptions m;
        if (o.size) m.size = o.size;
        m.halo = o.halo;
        synth::write_meltpool_dataset(o.out, o.count, o.seed, m);
        log << "wrote " << o.count << " meltpool frames to " << o.out.string() << "\n";
    } else {
        throw UsageError("synth: unknown kind '" + o.kind + "' (motion or meltpool)");
    }
    return 0;
}

int cmd_downscale(const DownscaleOptions& o, std::ostream& log, std::ostream& err)
{
    if (o.r < 1) throw UsageError("downscale: r must be >= 1");
    if (fs::exists(o.output) && fs::equivalent(o.input, o.output)) {
        throw UsageError("downscale: input and output directories coincide");
    }
    const auto files = png_files(o.input);
    if (files.empty()) throw DataError(o.input.string() + ": no PNG files");
    fs::create_directories(o.output);
    std::ostringstream pairs;
    pairs << "gt,lr\n";
    std::size_t failed = 0, written = 0;
    for (const auto& f : files) {
        const auto target = o.output / f.filename();
        try {
            if (o.r == 1) {
                fs::copy_file(f, target, fs::copy_options::overwrite_existing);
            } else {
                auto img = video::read_png(f, 3);
                if (is_gray(img)) img = video::read_png(f, 1);
                video::write_png(target, downscale_image(img, o.r));
            }
            pairs << f.string() << "," << target.string() << "\n";
            ++written;
        } catch (const std::exception& e) {
            err << "downscale: " << f.string() << ": " << e.what() << "\n";
            ++failed;
        }
    }
    write_text(o.output / "pairs.csv", pairs.str());
    log << "downscaled " << written << " of " << files.size() << " frames by " << o.r << "\n";
    return failed ? 2 : 0;
}

SRFrame super_resolve_frame(sr::ViTSR& model, const std::vector<video::ColorFrame>& lr, std::size_t t)
{
    const auto& cfg = model.config();
    std::vector<Tensor> ys;
    ys.reserve(2 * cfg.N + 1);
    const auto last = static_cast<std::ptrdiff_t>(lr.size()) - 1;
    for (std::ptrdiff_t d = -static_cast<std::ptrdiff_t>(cfg.N); d <= static_cast<std::ptrdiff_t>(cfg.N); ++d) {
        const auto i = std::clamp(static_cast<std::ptrdiff_t>(t) + d, std::ptrdiff_t{0}, last);
        ys.push_back(video::luma(lr[static_cast<std::size_t>(i)].rgb));
    }
    SRFrame out;
    out.y = sr::super_resolve(model, tensor::concat(ys, 0));
    const auto ycc = video::rgb_to_ycbcr(lr[t].rgb);
    const auto cb = video::upscale_bicubic(channel(ycc, 1), cfg.r);
    const auto cr = video::upscale_bicubic(channel(ycc, 2), cfg.r);
    out.rgb = video::ycbcr_to_rgb(tensor::concat({out.y, cb, cr}, 0));
    return out;
}

int cmd_superres(const SuperresOptions& o, std::ostream& log)
{
    if (!fs::exists(o.checkpoint)) throw DataError(o.checkpoint.string() + ": checkpoint not found (run train-sr)");
    auto model = sr::ViTSR::load(o.checkpoint);
    const auto seq = video::load_frame_sequence(o.input);
    fs::create_directories(o.output);
    for (std::size_t t = 0; t < seq.frames.size(); ++t) {
        const auto f = super_resolve_frame(model, seq.frames, t);
        video::write_png(o.output / seq.ids[t], video::tensor_to_image(f.rgb));
    }
    log << "super-resolved " << seq.frames.size() << " frames into " << o.output.string() << "\n";
    return 0;
}

int cmd_segment(const SegmentOptions& o, std::ostream& log)
{
    const auto seq = video::load_frame_sequence(o.input);
    std::ostringstream csv;
    const fs::path masks = o.output / "masks";
    fs::create_directories(masks);
    if (o.method == "fcn") {
        if (!fs::exists(o.checkpoint)) {
            throw DataError(o.checkpoint.string() + ": checkpoint not found (run train-seg)");
        }
        auto model = seg::FCN::load(o.checkpoint);
        csv << "frame_index,molten_pool_px,plasma_arc_px\n";
        for (std::size_t t = 0; t < seq.frames.size(); ++t) {
            auto mask = seg::segment_padded(model, video::luma(seq.frames[t].rgb));
            mask.logits.reset();
            seg::write_mask_png(masks / seq.ids[t], mask);
            const auto a = seg::extract_areas(mask);
            csv << seq.indices[t] << "," << a.molten_pool_px << "," << a.plasma_arc_px << "\n";
        }
    } else {
        const auto method = classical::parse_method(o.method);
        csv << "frame_index,foreground_px,threshold\n";
        for (std::size_t t = 0; t < seq.frames.size(); ++t) {
            const auto y = video::luma(seq.frames[t].rgb);
            const auto gray = classical::to_gray8(y);
            const auto res = classical::segment_classical(gray, y.dim(2), y.dim(1), method);
            seg::SegMask mask;
            mask.height = y.dim(1);
            mask.width = y.dim(2);
            mask.labels = res.foreground;
            seg::write_mask_png(masks / seq.ids[t], mask);
            const auto fg = static_cast<std::size_t>(std::count(res.foreground.begin(), res.foreground.end(), 1));
            csv << seq.indices[t] << "," << fg << "," << (res.threshold ? fmt(*res.threshold) : "") << "\n";
        }
    }
    write_text(o.output / "areas.csv", csv.str());
    log << "segmented " << seq.frames.size() << " frames with " << o.method << "\n";
    return 0;
}

std::string quality_csv(const std::vector<metrics::QualityReport>& reports)
{
    std::ostringstream csv;
    csv << "frame_id,psnr_db,ssim\n";
    for (const auto& r : reports) csv << r.frame_id << "," << fmt(r.psnr_db) << "," << fmt(r.ssim) << "\n";
    const auto s = metrics::mean_over_sequence(reports);
    csv << "mean," << fmt(s.mean_psnr_db) << "," << fmt(s.mean_ssim) << "\n";
    return csv.str();
}

int cmd_eval(const EvalOptions& o, std::ostream& log)
{
    const auto est = video::load_frame_sequence(o.estimate);
    const auto ref = video::load_frame_sequence(o.reference);
    if (est.ids != ref.ids) {
        throw DataError("eval: " + o.estimate.string() + " and " + o.reference.string() +
                        " hold different frame sets");
    }
    std::vector<metrics::QualityReport> reports;
    for (std::size_t t = 0; t < est.frames.size(); ++t) {
        auto a = video::luma(est.frames[t].rgb), b = video::luma(ref.frames[t].rgb);
        if (o.eight_bit) {
            reports.push_back(metrics::evaluate(est.ids[t], levels8(a), levels8(b), 255.0));
        } else {
            reports.push_back(metrics::evaluate(est.ids[t], a, b, o.peak));
        }
    }
    const auto text = quality_csv(reports);
    if (o.csv.empty()) {
        log << text;
    } else {
        write_text(o.csv, text);
        const auto s = metrics::mean_over_sequence(reports);
        log << s.frames << " frames, mean PSNR " << fmt(s.mean_psnr_db) << " dB, mean SSIM " << fmt(s.mean_ssim)
            << "\n";
    }
    return 0;
}

} // namespace insitu::app
