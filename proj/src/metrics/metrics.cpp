#include "insitu/metrics/metrics.hpp"

#include <array>
#include <cmath>

#include "insitu/errors.hpp"

namespace insitu::metrics {

namespace {

constexpr std::size_t kWindow = 11;
constexpr double kSigma = 1.5;

void require_same(const Tensor& a, const Tensor& b, const char* op)
{
    if (a.shape() != b.shape()) {
        throw ShapeError(std::string(op) + ": shapes " + tensor::shape_str(a.shape()) + " and " +
                         tensor::shape_str(b.shape()) + " differ");
    }
}

std::array<double, kWindow> gaussian_window()
{
    std::array<double, kWindow> g{};
    double total = 0.0;
    for (std::size_t i = 0; i < kWindow; ++i) {
        const double d = static_cast<double>(i) - static_cast<double>(kWindow / 2);
        g[i] = std::exp(-d * d / (2.0 * kSigma * kSigma));
        total += g[i];
    }
    for (auto& v : g) v /= total;
    return g;
}

// Half-sample symmetric reflection: ... c b a | a b c ...
std::size_t reflect(long i, long n)
{
    while (i < 0 || i >= n) i = i < 0 ? -i - 1 : 2 * n - i - 1;
    return static_cast<std::size_t>(i);
}

std::vector<double> blur(const std::vector<double>& img, std::size_t h, std::size_t w,
                         const std::array<double, kWindow>& g)
{
    const long half = kWindow / 2;
    std::vector<double> tmp(h * w), out(h * w);
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            double acc = 0.0;
            for (long k = -half; k <= half; ++k) acc += g[k + half] * img[y * w + reflect(long(x) + k, long(w))];
            tmp[y * w + x] = acc;
        }
    }
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            double acc = 0.0;
            for (long k = -half; k <= half; ++k) acc += g[k + half] * tmp[reflect(long(y) + k, long(h)) * w + x];
            out[y * w + x] = acc;
        }
    }
    return out;
}

} // namespace

double psnr(const Tensor& a, const Tensor& b, double peak)
{
    require_same(a, b, "psnr");
    if (!(peak > 0.0)) throw UsageError("psnr: peak must be positive");
    auto x = a.data();
    auto y = b.data();
    if (x.empty()) throw ShapeError("psnr: empty images");
    double mse = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) mse += (x[i] - y[i]) * (x[i] - y[i]);
    mse /= static_cast<double>(x.size());
    if (mse == 0.0) return kInfinity;
    return 10.0 * std::log10(peak * peak / mse);
}

double ssim(const Tensor& a, const Tensor& b, double peak)
{
    require_same(a, b, "ssim");
    const auto& s = a.shape();
    const bool single = s.size() == 2 || (s.size() == 3 && s[0] == 1);
    if (!single) throw ShapeError("ssim: expected a single-channel image, got " + tensor::shape_str(s));
    const std::size_t h = s[s.size() - 2], w = s[s.size() - 1];
    if (h < kWindow || w < kWindow) {
        throw ShapeError("ssim: image " + tensor::shape_str(s) + " is smaller than the 11x11 window");
    }

    const std::size_t n = h * w;
    std::vector<double> x(a.data().begin(), a.data().end()), y(b.data().begin(), b.data().end());
    std::vector<double> xx(n), yy(n), xy(n);
    for (std::size_t i = 0; i < n; ++i) {
        xx[i] = x[i] * x[i];
        yy[i] = y[i] * y[i];
        xy[i] = x[i] * y[i];
    }
    const auto g = gaussian_window();
    const auto mx = blur(x, h, w, g), my = blur(y, h, w, g);
    const auto sxx = blur(xx, h, w, g), syy = blur(yy, h, w, g), sxy = blur(xy, h, w, g);

    const double c1 = (0.01 * peak) * (0.01 * peak);
    const double c2 = (0.03 * peak) * (0.03 * peak);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double vx = sxx[i] - mx[i] * mx[i];
        const double vy = syy[i] - my[i] * my[i];
        const double cov = sxy[i] - mx[i] * my[i];
        total += ((2 * mx[i] * my[i] + c1) * (2 * cov + c2)) /
                 ((mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2));
    }
    return total / static_cast<double>(n);
}

QualityReport evaluate(const std::string& frame_id, const Tensor& estimate, const Tensor& reference, double peak)
{
    return {frame_id, psnr(estimate, reference, peak), ssim(estimate, reference, peak)};
}

SequenceSummary mean_over_sequence(const std::vector<QualityReport>& reports)
{
    if (reports.empty()) throw DataError("mean_over_sequence: no reports");
    SequenceSummary s;
    s.frames = reports.size();
    double psnr_total = 0.0, ssim_total = 0.0;
    for (const auto& r : reports) {
        ssim_total += r.ssim;
        if (std::isinf(r.psnr_db)) {
            ++s.infinity_count;
        } else {
            psnr_total += r.psnr_db;
        }
    }
    const std::size_t finite = s.frames - s.infinity_count;
    s.mean_psnr_db = finite > 0 ? psnr_total / static_cast<double>(finite) : kInfinity;
    s.mean_ssim = ssim_total / static_cast<double>(s.frames);
    return s;
}

} // namespace insitu::metrics
