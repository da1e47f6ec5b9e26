#include "insitu/classical/threshold.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "insitu/errors.hpp"

namespace insitu::classical {

Histogram256 Histogram256::of(std::span<const std::uint8_t> pixels)
{
    Histogram256 h;
    for (auto p : pixels) ++h.counts[p];
    h.total = pixels.size();
    return h;
}

Histogram256 Histogram256::from_counts(const std::array<std::uint64_t, 256>& counts)
{
    Histogram256 h;
    h.counts = counts;
    for (auto c : counts) h.total += c;
    return h;
}

std::size_t Histogram256::populated_bins() const
{
    std::size_t n = 0;
    for (auto c : counts) n += c > 0;
    return n;
}

namespace {

void require_spread(const Histogram256& hist, const char* op)
{
    if (hist.populated_bins() < 2) {
        throw DataError(std::string(op) + ": degenerate histogram (fewer than two populated bins)");
    }
}

// Lowest index whose score is within the tie tolerance of the maximum.
int lowest_argmax(const std::array<double, 256>& score, int first, int last)
{
    double best = -std::numeric_limits<double>::infinity();
    for (int t = first; t <= last; ++t) best = std::max(best, score[t]);
    const double slack = kTieTolerance * std::max(1.0, std::abs(best));
    for (int t = first; t <= last; ++t) {
        if (score[t] >= best - slack) return t;
    }
    return first;
}

} // namespace

int otsu_threshold(const Histogram256& hist)
{
    require_spread(hist, "otsu_threshold");
    const double n = static_cast<double>(hist.total);
    double mean_total = 0.0;
    for (int i = 0; i < 256; ++i) mean_total += i * (hist.counts[i] / n);

    std::array<double, 256> score{};
    score.fill(-std::numeric_limits<double>::infinity());
    double w0 = 0.0, m0 = 0.0;
    std::uint64_t count0 = 0;
    for (int t = 0; t < 255; ++t) {
        const double p = hist.counts[t] / n;
        w0 += p;
        m0 += t * p;
        count0 += hist.counts[t];
        if (count0 == 0 || count0 == hist.total) continue;
        const double w1 = 1.0 - w0;
        const double mu0 = m0 / w0, mu1 = (mean_total - m0) / w1;
        score[t] = w0 * w1 * (mu0 - mu1) * (mu0 - mu1);
    }
    return lowest_argmax(score, 0, 254);
}

int triangle_threshold(const Histogram256& hist)
{
    require_spread(hist, "triangle_threshold");
    int lo = 0, hi = 255, peak = 0;
    while (hist.counts[lo] == 0) ++lo;
    while (hist.counts[hi] == 0) --hi;
    for (int i = 0; i < 256; ++i) {
        if (hist.counts[i] > hist.counts[peak]) peak = i;
    }
    const int end = (peak - lo) > (hi - peak) ? lo : hi;
    const double x0 = peak, y0 = static_cast<double>(hist.counts[peak]);
    const double dx = end - x0, dy = static_cast<double>(hist.counts[end]) - y0;
    const double norm = std::hypot(dx, dy);

    const int first = std::min(peak, end), last = std::max(peak, end);
    std::array<double, 256> score{};
    for (int t = first; t <= last; ++t) {
        score[t] = std::abs(dy * (t - x0) - dx * (static_cast<double>(hist.counts[t]) - y0)) / norm;
    }
    return lowest_argmax(score, first, last);
}

int max_entropy_threshold(const Histogram256& hist)
{
    require_spread(hist, "max_entropy_threshold");
    const double n = static_cast<double>(hist.total);
    std::array<double, 256> p{}, plogp{};
    double plogp_total = 0.0;
    for (int i = 0; i < 256; ++i) {
        p[i] = hist.counts[i] / n;
        plogp[i] = p[i] > 0.0 ? p[i] * std::log(p[i]) : 0.0;
        plogp_total += plogp[i];
    }

    // H(P) over a class of mass P with S = sum p ln p equals ln P - S / P.
    std::array<double, 256> score{};
    score.fill(-std::numeric_limits<double>::infinity());
    double mass0 = 0.0, s0 = 0.0;
    std::uint64_t count0 = 0;
    for (int t = 0; t < 255; ++t) {
        mass0 += p[t];
        s0 += plogp[t];
        count0 += hist.counts[t];
        if (count0 == 0 || count0 == hist.total) continue;
        const double mass1 = 1.0 - mass0, s1 = plogp_total - s0;
        score[t] = (std::log(mass0) - s0 / mass0) + (std::log(mass1) - s1 / mass1);
    }
    return lowest_argmax(score, 0, 254);
}

IterativeThreshold basic_global_threshold(const Histogram256& hist, double eps)
{
    require_spread(hist, "basic_global_threshold");
    if (!(eps > 0.0)) throw UsageError("basic_global_threshold: eps must be positive");
    double sum = 0.0;
    for (int i = 0; i < 256; ++i) sum += static_cast<double>(i) * hist.counts[i];
    IterativeThreshold r;
    double t = sum / static_cast<double>(hist.total);
    for (;;) {
        double s_lo = 0.0, n_lo = 0.0, s_hi = 0.0, n_hi = 0.0;
        for (int i = 0; i < 256; ++i) {
            const double c = static_cast<double>(hist.counts[i]);
            if (i <= t) {
                s_lo += i * c;
                n_lo += c;
            } else {
                s_hi += i * c;
                n_hi += c;
            }
        }
        const double next = (s_lo / n_lo + s_hi / n_hi) / 2.0;
        ++r.iterations;
        const bool done = std::abs(next - t) < eps;
        t = next;
        if (done) break;
        if (r.iterations > 10000) throw NumericError("basic_global_threshold: no convergence");
    }
    r.threshold = t;
    return r;
}

IterativeThreshold basic_global_threshold(std::span<const std::uint8_t> pixels, double eps)
{
    return basic_global_threshold(Histogram256::of(pixels), eps);
}

std::vector<std::uint8_t> segment_by_threshold(std::span<const std::uint8_t> pixels, double t)
{
    std::vector<std::uint8_t> out(pixels.size());
    for (std::size_t i = 0; i < pixels.size(); ++i) out[i] = pixels[i] > t ? 1 : 0;
    return out;
}

} // namespace insitu::classical
