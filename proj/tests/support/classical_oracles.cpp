#include "classical_oracles.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace insitu::testing {

using classical::Histogram256;

namespace {

int pick(const std::vector<double>& score)
{
    double best = -std::numeric_limits<double>::infinity();
    for (double s : score) best = std::max(best, s);
    const double slack = classical::kTieTolerance * std::max(1.0, std::abs(best));
    for (std::size_t t = 0; t < score.size(); ++t) {
        if (score[t] >= best - slack) return int(t);
    }
    return -1;
}

} // namespace

int otsu_oracle(const Histogram256& h)
{
    std::vector<double> score(256, -std::numeric_limits<double>::infinity());
    for (int t = 0; t < 256; ++t) {
        double n0 = 0, n1 = 0, s0 = 0, s1 = 0;
        for (int i = 0; i < 256; ++i) {
            (i <= t ? n0 : n1) += double(h.counts[i]);
            (i <= t ? s0 : s1) += double(i) * double(h.counts[i]);
        }
        if (n0 == 0 || n1 == 0) continue;
        const double w0 = n0 / double(h.total), w1 = n1 / double(h.total);
        const double d = s0 / n0 - s1 / n1;
        score[t] = w0 * w1 * d * d;
    }
    return pick(score);
}

int triangle_oracle(const Histogram256& h)
{
    int peak = 0, lo = 255, hi = 0;
    for (int i = 0; i < 256; ++i) {
        if (h.counts[i] > h.counts[peak]) peak = i;
        if (h.counts[i] > 0) {
            lo = std::min(lo, i);
            hi = std::max(hi, i);
        }
    }
    const int end = hi - peak >= peak - lo ? hi : lo;
    // Distance from (t, h[t]) to its orthogonal projection onto the line.
    const double ax = peak, ay = double(h.counts[peak]);
    const double bx = end, by = double(h.counts[end]);
    const double ux = bx - ax, uy = by - ay, len2 = ux * ux + uy * uy;
    std::vector<double> score(256, -std::numeric_limits<double>::infinity());
    for (int t = std::min(peak, end); t <= std::max(peak, end); ++t) {
        const double px = t - ax, py = double(h.counts[t]) - ay;
        const double s = (px * ux + py * uy) / len2;
        const double fx = ax + s * ux, fy = ay + s * uy;
        score[t] = std::hypot(t - fx, double(h.counts[t]) - fy);
    }
    return pick(score);
}

int max_entropy_oracle(const Histogram256& h)
{
    std::vector<double> score(256, -std::numeric_limits<double>::infinity());
    for (int t = 0; t < 256; ++t) {
        double n0 = 0, n1 = 0;
        for (int i = 0; i < 256; ++i) (i <= t ? n0 : n1) += double(h.counts[i]);
        if (n0 == 0 || n1 == 0) continue;
        double e = 0;
        for (int i = 0; i < 256; ++i) {
            if (h.counts[i] == 0) continue;
            const double q = double(h.counts[i]) / (i <= t ? n0 : n1);
            e -= q * std::log(q);
        }
        score[t] = e;
    }
    return pick(score);
}

BgtTrace bgt_oracle(const Histogram256& h, double eps, std::size_t max_iterations)
{
    std::vector<int> pixels;
    for (int v = 0; v < 256; ++v) pixels.insert(pixels.end(), h.counts[v], v);
    auto mean_of = [&](auto keep) {
        double s = 0.0;
        std::size_t n = 0;
        for (int p : pixels) {
            if (keep(p)) {
                s += p;
                ++n;
            }
        }
        return s / static_cast<double>(n);
    };
    BgtTrace out;
    double t = mean_of([](int) { return true; });
    while (out.iterations < max_iterations) {
        const double next = (mean_of([&](int p) { return p <= t; }) + mean_of([&](int p) { return p > t; })) / 2.0;
        ++out.iterations;
        const double step = std::abs(next - t);
        t = next;
        if (step < eps) {
            out.converged = true;
            break;
        }
    }
    out.threshold = t;
    return out;
}

Histogram256 random_histogram(std::mt19937_64& rng)
{
    std::array<std::uint64_t, 256> c{};
    std::uniform_int_distribution<int> kind(0, 3), bin(0, 255);
    switch (kind(rng)) {
    case 0: { // sparse spikes
        std::uniform_int_distribution<int> spikes(2, 12);
        std::uniform_int_distribution<std::uint64_t> mass(1, 5000);
        for (int k = spikes(rng); k > 0; --k) c[bin(rng)] += mass(rng);
        break;
    }
    case 1: { // two gaussian modes
        std::uniform_real_distribution<double> mu(10, 245), sd(3, 40), frac(0.1, 0.9);
        const double m1 = mu(rng), m2 = mu(rng), s1 = sd(rng), s2 = sd(rng), f = frac(rng);
        std::normal_distribution<double> g1(m1, s1), g2(m2, s2);
        std::bernoulli_distribution which(f);
        for (int k = 0; k < 20000; ++k) {
            const double v = which(rng) ? g1(rng) : g2(rng);
            c[std::size_t(std::clamp(std::lround(v), 0L, 255L))]++;
        }
        break;
    }
    case 2: { // skewed: exponential tail from a peak
        std::exponential_distribution<double> e(1.0 / 30.0);
        const int start = bin(rng) / 2;
        for (int k = 0; k < 20000; ++k) c[std::size_t(std::min(255L, start + std::lround(e(rng))))]++;
        break;
    }
    default: { // noisy flat
        std::uniform_int_distribution<std::uint64_t> mass(0, 100);
        for (auto& v : c) v = mass(rng);
        break;
    }
    }
    auto h = Histogram256::from_counts(c);
    if (h.populated_bins() < 2) {
        c[0] += 1;
        c[255] += 1;
        h = Histogram256::from_counts(c);
    }
    return h;
}

} // namespace insitu::testing
