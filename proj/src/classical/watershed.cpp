#include "insitu/classical/watershed.hpp"

#include <cmath>
#include <queue>
#include <tuple>

#include "insitu/classical/threshold.hpp"
#include "insitu/errors.hpp"

namespace insitu::classical {

namespace {

struct QueueEntry {
    double value;
    std::uint64_t order;
    std::size_t index;

    bool operator>(const QueueEntry& o) const { return std::tie(value, order) > std::tie(o.value, o.order); }
};

template <typename F>
void for_neighbors(std::size_t i, std::size_t w, std::size_t h, F&& f)
{
    const std::size_t y = i / w, x = i % w;
    if (y > 0) f(i - w);
    if (x > 0) f(i - 1);
    if (x + 1 < w) f(i + 1);
    if (y + 1 < h) f(i + w);
}

std::vector<std::uint8_t> erode(const std::vector<std::uint8_t>& mask, std::size_t w, std::size_t h)
{
    std::vector<std::uint8_t> out(mask.size(), 0);
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            bool keep = mask[y * w + x] != 0;
            for (long dy = -1; dy <= 1 && keep; ++dy) {
                for (long dx = -1; dx <= 1 && keep; ++dx) {
                    const long yy = long(y) + dy, xx = long(x) + dx;
                    if (yy < 0 || xx < 0 || yy >= long(h) || xx >= long(w)) continue;
                    keep = mask[yy * long(w) + xx] != 0;
                }
            }
            out[y * w + x] = keep ? 1 : 0;
        }
    }
    return out;
}

bool any(const std::vector<std::uint8_t>& m)
{
    for (auto v : m) {
        if (v) return true;
    }
    return false;
}

std::vector<std::uint8_t> erode_up_to(std::vector<std::uint8_t> mask, std::size_t w, std::size_t h, int steps)
{
    for (int i = 0; i < steps; ++i) {
        auto next = erode(mask, w, h);
        if (!any(next)) break;
        mask = std::move(next);
    }
    return mask;
}

} // namespace

LabelMap watershed(std::span<const double> surface, const LabelMap& markers)
{
    const std::size_t w = markers.width, h = markers.height, n = w * h;
    if (surface.size() != n || markers.labels.size() != n) {
        throw ShapeError("watershed: surface and markers must both be width x height");
    }

    constexpr std::int32_t kUnvisited = -1;
    LabelMap out{w, h, std::vector<std::int32_t>(n, kUnvisited)};
    std::vector<bool> queued(n, false);
    std::priority_queue<QueueEntry, std::vector<QueueEntry>, std::greater<>> queue;
    std::uint64_t order = 0;

    bool seeded = false;
    for (std::size_t i = 0; i < n; ++i) {
        if (markers.labels[i] != 0) {
            out.labels[i] = markers.labels[i];
            queued[i] = true;
            seeded = true;
        }
    }
    if (!seeded) throw DataError("watershed: no markers");

    for (std::size_t i = 0; i < n; ++i) {
        if (markers.labels[i] == 0) continue;
        for_neighbors(i, w, h, [&](std::size_t j) {
            if (!queued[j]) {
                queued[j] = true;
                queue.push({surface[j], order++, j});
            }
        });
    }

    while (!queue.empty()) {
        const std::size_t i = queue.top().index;
        queue.pop();
        std::int32_t label = kUnvisited;
        bool conflict = false;
        for_neighbors(i, w, h, [&](std::size_t j) {
            const std::int32_t l = out.labels[j];
            if (l <= 0) return;
            if (label == kUnvisited) {
                label = l;
            } else if (l != label) {
                conflict = true;
            }
        });
        out.labels[i] = conflict || label == kUnvisited ? 0 : label;
        if (out.labels[i] == 0) continue;
        for_neighbors(i, w, h, [&](std::size_t j) {
            if (!queued[j]) {
                queued[j] = true;
                queue.push({surface[j], order++, j});
            }
        });
    }

    // Pockets sealed off by lines take the label of the nearest region.
    std::vector<std::int32_t> reach(n, kUnvisited);
    std::queue<std::size_t> bfs;
    for (std::size_t i = 0; i < n; ++i) {
        if (out.labels[i] > 0) {
            reach[i] = out.labels[i];
            bfs.push(i);
        }
    }
    while (!bfs.empty()) {
        const std::size_t i = bfs.front();
        bfs.pop();
        for_neighbors(i, w, h, [&](std::size_t j) {
            if (reach[j] != kUnvisited) return;
            reach[j] = reach[i];
            bfs.push(j);
        });
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (out.labels[i] == kUnvisited) out.labels[i] = reach[i];
    }
    return out;
}

std::vector<double> gradient_magnitude(std::span<const std::uint8_t> pixels, std::size_t width, std::size_t height)
{
    if (pixels.size() != width * height) throw ShapeError("gradient_magnitude: pixel count does not match size");
    std::vector<double> g(pixels.size());
    auto at = [&](std::size_t y, std::size_t x) { return static_cast<double>(pixels[y * width + x]); };
    for (std::size_t y = 0; y < height; ++y) {
        for (std::size_t x = 0; x < width; ++x) {
            const std::size_t x0 = x > 0 ? x - 1 : x, x1 = x + 1 < width ? x + 1 : x;
            const std::size_t y0 = y > 0 ? y - 1 : y, y1 = y + 1 < height ? y + 1 : y;
            const double gx = x1 > x0 ? (at(y, x1) - at(y, x0)) / double(x1 - x0) : 0.0;
            const double gy = y1 > y0 ? (at(y1, x) - at(y0, x)) / double(y1 - y0) : 0.0;
            g[y * width + x] = std::hypot(gx, gy);
        }
    }
    return g;
}

LabelMap auto_markers(std::span<const std::uint8_t> pixels, std::size_t width, std::size_t height)
{
    const int t = otsu_threshold(Histogram256::of(pixels));
    auto fg = segment_by_threshold(pixels, t);
    std::vector<std::uint8_t> bg(fg.size());
    for (std::size_t i = 0; i < fg.size(); ++i) bg[i] = fg[i] ? 0 : 1;
    fg = erode_up_to(std::move(fg), width, height, 2);
    bg = erode_up_to(std::move(bg), width, height, 2);

    LabelMap m{width, height, std::vector<std::int32_t>(pixels.size(), 0)};
    for (std::size_t i = 0; i < pixels.size(); ++i) {
        if (bg[i]) m.labels[i] = 1;
        if (fg[i]) m.labels[i] = 2;
    }
    return m;
}

std::vector<std::uint8_t> watershed_segment(std::span<const std::uint8_t> pixels, std::size_t width,
                                            std::size_t height)
{
    const auto surface = gradient_magnitude(pixels, width, height);
    const auto flooded = watershed(surface, auto_markers(pixels, width, height));
    std::vector<std::uint8_t> out(pixels.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = flooded.labels[i] == 2 ? 1 : 0;
    return out;
}

} // namespace insitu::classical
