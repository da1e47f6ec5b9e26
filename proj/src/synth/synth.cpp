#include "insitu/synth/synth.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

#include "insitu/errors.hpp"
#include "insitu/seg/fcn.hpp"
#include "insitu/video/color.hpp"
#include "insitu/video/png_io.hpp"
#include "insitu/video/resample.hpp"
#include "insitu/video/sequence.hpp"

namespace insitu::synth {

namespace {

constexpr double kPi = std::numbers::pi;

// Platform-independent draws: only the raw mt19937_64 output is used.
class Stream {
public:
    Stream(std::uint64_t seed, std::uint64_t a, std::uint64_t b) : g_(mix(mix(seed) ^ mix(a + 0x9e37) ^ (b << 1))) {}

    double uniform(double lo = 0.0, double hi = 1.0)
    {
        return lo + (hi - lo) * static_cast<double>(g_() >> 11) * 0x1.0p-53;
    }

    double normal()
    {
        const double u1 = 1.0 - uniform(), u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
    }

private:
    static std::uint64_t mix(std::uint64_t x)
    {
        x += 0x9e3779b97f4a7c15ULL;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    }

    std::mt19937_64 g_;
};

double quantize(double v)
{
    return video::quantize_unit(v) / 255.0;
}

struct Wave {
    double fx, fy, phase, amp;
};

struct Speck {
    double x, y, amp;
};

} // namespace

std::vector<Tensor> motion_clip(std::uint64_t seed, std::size_t clip, const MotionOptions& o)
{
    Stream rng(seed, 1, clip);
    const double s = static_cast<double>(o.size);

    // low-frequency bed shading plus a weak fine speckle texture
    std::vector<Wave> waves(10);
    for (std::size_t i = 0; i < waves.size(); ++i) {
        const bool fine = i >= 6;
        const double f = fine ? rng.uniform(0.8, 1.4) : rng.uniform(0.03, 0.3);
        const double theta = rng.uniform(0.0, kPi);
        waves[i] = {f * std::cos(theta), f * std::sin(theta), rng.uniform(0.0, 2 * kPi), fine ? 0.003 : 0.04};
    }
    struct Blob {
        double x, y, sigma, amp;
    };
    std::vector<Blob> blobs(o.blobs);
    for (auto& b : blobs) {
        b = {rng.uniform(-0.5 * s, 1.5 * s), rng.uniform(-0.5 * s, 1.5 * s), rng.uniform(2.0, 4.0),
             rng.uniform(0.12, 0.4) * (rng.uniform() < 0.25 ? -0.5 : 1.0)};
    }
    const double vx = rng.uniform(-1.5, 1.5), vy = rng.uniform(-1.5, 1.5);

    const double arc_x = s * (0.5 + rng.uniform(-0.04, 0.04)), arc_y = s * (0.33 + rng.uniform(-0.04, 0.04));
    const double pool_x = s * (0.5 + rng.uniform(-0.04, 0.04)), pool_y = s * (0.63 + rng.uniform(-0.04, 0.04));
    const double sway_w = rng.uniform(0.5, 1.2), sway_phase = rng.uniform(0.0, 2 * kPi);
    const double flicker_w = rng.uniform(0.8, 2.0), flicker_phase = rng.uniform(0.0, 2 * kPi);

    std::vector<Tensor> frames;
    std::vector<double> bed(o.size * o.size);
    for (std::size_t t = 0; t < o.frames; ++t) {
        const double ft = static_cast<double>(t);
        const double dx = vx * ft, dy = vy * ft;
        const double sway = 0.03 * s * std::sin(sway_w * ft + sway_phase);
        const double flicker = 1.0 + 0.05 * std::sin(flicker_w * ft + flicker_phase) + 0.02 * rng.normal();
        const double ax = arc_x + sway, ay = arc_y;
        const double px = pool_x + 0.5 * sway, py = pool_y;

        for (std::size_t y = 0; y < o.size; ++y) {
            for (std::size_t x = 0; x < o.size; ++x) {
                const double bx = static_cast<double>(x) - dx, by = static_cast<double>(y) - dy;
                double v = 0.3;
                for (const auto& w : waves) v += w.amp * std::sin(w.fx * bx + w.fy * by + w.phase);
                bed[y * o.size + x] = v;
            }
        }
        // blobs ride on the bed, so they translate with it
        for (const auto& b : blobs) {
            const double cx = b.x + dx, cy = b.y + dy, reach = 4.0 * b.sigma;
            const long x0 = std::max(0L, static_cast<long>(std::floor(cx - reach)));
            const long x1 = std::min(static_cast<long>(o.size) - 1, static_cast<long>(std::ceil(cx + reach)));
            const long y0 = std::max(0L, static_cast<long>(std::floor(cy - reach)));
            const long y1 = std::min(static_cast<long>(o.size) - 1, static_cast<long>(std::ceil(cy + reach)));
            for (long y = y0; y <= y1; ++y) {
                for (long x = x0; x <= x1; ++x) {
                    const double d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
                    bed[y * o.size + x] += b.amp * std::exp(-d2 / (2 * b.sigma * b.sigma));
                }
            }
        }

        std::vector<double> v(o.size * o.size);
        for (std::size_t y = 0; y < o.size; ++y) {
            for (std::size_t x = 0; x < o.size; ++x) {
                const double X = static_cast<double>(x), Y = static_cast<double>(y);
                const double arc = 0.35 * std::exp(-(std::pow((X - ax) / (0.06 * s), 2) + std::pow((Y - ay) / (0.12 * s), 2)) / 2);
                const double pool = 0.2 * std::exp(-(std::pow((X - px) / (0.18 * s), 2) + std::pow((Y - py) / (0.07 * s), 2)) / 2);
                const double rx = X / s - 0.5, ry = Y / s - 0.5;
                const double vignette = 1.0 - 0.7 * (rx * rx + ry * ry);
                v[y * o.size + x] = quantize((bed[y * o.size + x] + arc + pool) * flicker * vignette);
            }
        }
        frames.push_back(Tensor::from({1, o.size, o.size}, std::move(v)));
    }
    return frames;
}

MeltpoolFrame meltpool_frame(std::uint64_t seed, std::size_t index, const MeltpoolOptions& o)
{
    Stream rng(seed, 2, index);
    const double s = static_cast<double>(o.size);

    const double pcx = s * rng.uniform(0.38, 0.62), pcy = s * rng.uniform(0.58, 0.7);
    const double pa = s * rng.uniform(0.17, 0.25), pb = s * rng.uniform(0.07, 0.1);
    const double aa = s * rng.uniform(0.06, 0.09), ab = s * rng.uniform(0.13, 0.19);
    const double acx = pcx + s * rng.uniform(-0.03, 0.03), acy = pcy - pb - 0.7 * ab;
    const double pool_level = rng.uniform(0.45, 0.55), arc_level = rng.uniform(0.88, 0.96);
    const double halo_amp = o.halo ? rng.uniform(0.4, 0.55) : 0.0, halo_sigma = s * rng.uniform(0.1, 0.14);
    const double ripple_f = rng.uniform(0.9, 1.3), ripple_phase = rng.uniform(0.0, 2 * kPi);

    std::vector<Speck> spatter(static_cast<std::size_t>(rng.uniform(4, 10)));
    for (auto& p : spatter) p = {rng.uniform(0, s), rng.uniform(0, s * 0.55), rng.uniform(0.5, 0.9)};

    MeltpoolFrame out;
    out.labels.assign(o.size * o.size, seg::background);
    std::vector<double> v(o.size * o.size);
    for (std::size_t y = 0; y < o.size; ++y) {
        for (std::size_t x = 0; x < o.size; ++x) {
            const double X = static_cast<double>(x) + 0.5, Y = static_cast<double>(y) + 0.5;
            const double pe = std::pow((X - pcx) / pa, 2) + std::pow((Y - pcy) / pb, 2);
            const double ae = std::pow((X - acx) / aa, 2) + std::pow((Y - acy) / ab, 2);

            double value = 0.12 + 0.05 * rng.normal();
            std::uint8_t label = seg::background;
            if (pe <= 1.0) {
                label = seg::molten_pool;
                value = pool_level + 0.06 * std::sin(ripple_f * X + ripple_phase) * std::cos(0.7 * ripple_f * Y) +
                        0.02 * rng.normal();
            }
            if (ae <= 1.0) {
                label = seg::plasma_arc;
                value = arc_level + 0.02 * rng.normal();
            } else {
                // glow falls off with distance outside the arc boundary
                const double d = (std::sqrt(ae) - 1.0) * std::min(aa, ab);
                value += halo_amp * std::exp(-d * d / (2 * halo_sigma * halo_sigma));
            }
            for (const auto& p : spatter) {
                const double d2 = (X - p.x) * (X - p.x) + (Y - p.y) * (Y - p.y);
                if (d2 < 2.0 && label == seg::background) value = std::max(value, p.amp);
            }
            v[y * o.size + x] = quantize(value);
            out.labels[y * o.size + x] = label;
        }
    }
    out.frame = Tensor::from({1, o.size, o.size}, std::move(v));
    return out;
}

void write_motion_dataset(const std::filesystem::path& out, std::size_t count, std::uint64_t seed,
                          std::size_t scale_r, const MotionOptions& options)
{
    namespace fs = std::filesystem;
    for (std::size_t c = 0; c < count; ++c) {
        char name[32];
        std::snprintf(name, sizeof name, "clip_%04zu", c);
        const fs::path dir = out / name;
        fs::create_directories(dir / "gt");
        fs::create_directories(dir / "lr");
        std::ofstream pairs(dir / "pairs.csv");
        pairs << "gt,lr\n";
        const auto frames = motion_clip(seed, c, options);
        for (std::size_t t = 0; t < frames.size(); ++t) {
            const std::string file = video::frame_filename(t + 1);
            video::write_png(dir / "gt" / file, video::tensor_to_image(frames[t]));
            video::write_png(dir / "lr" / file, video::tensor_to_image(video::downscale_nearest(frames[t], scale_r)));
            pairs << "gt/" << file << ",lr/" << file << "\n";
        }
        if (!pairs) throw DataError("synth: cannot write " + (dir / "pairs.csv").string());
    }
}

void write_meltpool_dataset(const std::filesystem::path& out, std::size_t count, std::uint64_t seed,
                            const MeltpoolOptions& options)
{
    namespace fs = std::filesystem;
    fs::create_directories(out / "frames");
    fs::create_directories(out / "masks");
    for (std::size_t i = 0; i < count; ++i) {
        const auto f = meltpool_frame(seed, i, options);
        const std::string file = video::frame_filename(i + 1);
        video::write_png(out / "frames" / file, video::tensor_to_image(f.frame));
        seg::SegMask m{options.size, options.size, f.labels, std::nullopt};
        seg::write_mask_png(out / "masks" / file, m);
    }
}

} // namespace insitu::synth
