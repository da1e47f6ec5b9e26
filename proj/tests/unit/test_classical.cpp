#include <doctest.h>

#include <random>
#include <set>

#include "classical_oracles.hpp"
#include "insitu/classical/segment.hpp"
#include "insitu/classical/threshold.hpp"
#include "insitu/classical/watershed.hpp"
#include "insitu/errors.hpp"

using namespace insitu;
using namespace insitu::classical;
using namespace insitu::testing;

namespace {

Histogram256 peaks(std::initializer_list<std::pair<int, std::uint64_t>> bins)
{
    std::array<std::uint64_t, 256> c{};
    for (auto [b, n] : bins) c[b] = n;
    return Histogram256::from_counts(c);
}

} // namespace

TEST_CASE("histogram")
{
    std::vector<std::uint8_t> px{0, 0, 5, 255};
    auto h = Histogram256::of(px);
    CHECK(h.total == 4);
    CHECK(h.counts[0] == 2);
    CHECK(h.populated_bins() == 3);
}

TEST_CASE("otsu")
{
    CHECK(otsu_threshold(peaks({{50, 100}, {200, 100}})) == 50);
    CHECK(otsu_oracle(peaks({{50, 100}, {200, 100}})) == 50);
    CHECK_THROWS_AS(otsu_threshold(peaks({{77, 10}})), DataError);
    CHECK_THROWS_AS(otsu_threshold(Histogram256{}), DataError);

    std::mt19937_64 rng(21);
    for (int i = 0; i < 100; ++i) {
        auto h = random_histogram(rng);
        CHECK(otsu_threshold(h) == otsu_oracle(h));
    }
}

TEST_CASE("triangle")
{
    std::array<std::uint64_t, 256> c{};
    c[10] = 1000;
    for (int i = 11; i <= 200; ++i) c[i] = std::uint64_t(500 - (i - 11) * 499 / 189);
    auto h = Histogram256::from_counts(c);
    const int t = triangle_threshold(h);
    CHECK(t > 10);
    CHECK(t < 200);
    CHECK(t == triangle_oracle(h));

    // equal extents pick the right tail: the line runs from (100, 100) to
    // (150, 10), and the empty bin 101 sits 98.2 counts below it
    auto sym = peaks({{50, 10}, {90, 2}, {100, 100}, {110, 2}, {150, 10}});
    CHECK(triangle_threshold(sym) == 101);
    CHECK(triangle_oracle(sym) == 101);

    CHECK_THROWS_AS(triangle_threshold(peaks({{3, 1}})), DataError);

    std::mt19937_64 rng(22);
    for (int i = 0; i < 100; ++i) {
        auto r = random_histogram(rng);
        CHECK(triangle_threshold(r) == triangle_oracle(r));
    }
}

TEST_CASE("max entropy")
{
    auto two = peaks({{50, 100}, {200, 100}});
    const int t = max_entropy_threshold(two);
    CHECK(t >= 50);
    CHECK(t < 200);
    CHECK(t == max_entropy_oracle(two));

    std::array<std::uint64_t, 256> flat{};
    flat.fill(7);
    auto uniform = Histogram256::from_counts(flat);
    CHECK(max_entropy_threshold(uniform) == max_entropy_oracle(uniform));

    CHECK_THROWS_AS(max_entropy_threshold(peaks({{0, 9}})), DataError);

    std::mt19937_64 rng(23);
    for (int i = 0; i < 100; ++i) {
        auto h = random_histogram(rng);
        CHECK(max_entropy_threshold(h) == max_entropy_oracle(h));
    }
}

TEST_CASE("basic global threshold")
{
    std::vector<std::uint8_t> a{10, 20};
    auto r = basic_global_threshold(std::span<const std::uint8_t>(a), 0.1);
    CHECK(r.threshold == 15.0);
    CHECK(r.iterations == 1);

    std::vector<std::uint8_t> b{0, 255};
    CHECK(basic_global_threshold(std::span<const std::uint8_t>(b), 0.1).threshold == 127.5);

    std::vector<std::uint8_t> flat(10, 4);
    CHECK_THROWS_AS(basic_global_threshold(std::span<const std::uint8_t>(flat)), DataError);

    std::mt19937_64 rng(24);
    for (int i = 0; i < 200; ++i) {
        auto h = random_histogram(rng);
        auto res = basic_global_threshold(h, 1e-9);
        CHECK(res.iterations <= 256);
        CHECK(res.threshold >= 0.0);
        CHECK(res.threshold <= 255.0);
    }
}

TEST_CASE("segment_by_threshold")
{
    std::vector<std::uint8_t> px{0, 10, 128, 255};
    auto none = segment_by_threshold(px, 255);
    auto all = segment_by_threshold(px, -1);
    for (std::size_t i = 0; i < px.size(); ++i) {
        CHECK(none[i] == 0);
        CHECK(all[i] == 1);
    }
    std::mt19937_64 rng(25);
    std::vector<std::uint8_t> img(500);
    for (auto& v : img) v = std::uint8_t(rng() & 0xff);
    auto prev = segment_by_threshold(img, -1);
    for (int t = 0; t < 256; t += 5) {
        auto cur = segment_by_threshold(img, t);
        for (std::size_t i = 0; i < img.size(); ++i) CHECK(cur[i] <= prev[i]);
        prev = cur;
    }
}

TEST_CASE("watershed")
{
    SUBCASE("1x5 ridge")
    {
        std::vector<double> surface{0, 1, 5, 1, 0};
        LabelMap markers{5, 1, {1, 0, 0, 0, 2}};
        auto out = watershed(surface, markers);
        CHECK(out.labels == std::vector<std::int32_t>{1, 1, 0, 2, 2});
    }

    SUBCASE("unopposed flood on a flat surface")
    {
        std::vector<double> surface(6 * 4, 0.0);
        LabelMap markers{6, 4, std::vector<std::int32_t>(24, 0)};
        markers.labels[9] = 3;
        auto out = watershed(surface, markers);
        for (auto l : out.labels) CHECK(l == 3);
    }

    SUBCASE("no markers")
    {
        std::vector<double> surface(4, 0.0);
        CHECK_THROWS_AS(watershed(surface, LabelMap{2, 2, {0, 0, 0, 0}}), DataError);
    }

    SUBCASE("total labeling with lines between distinct labels")
    {
        std::mt19937_64 rng(26);
        const std::size_t w = 24, h = 18;
        std::uniform_real_distribution<double> u(0, 1);
        for (int trial = 0; trial < 10; ++trial) {
            std::vector<double> surface(w * h);
            for (auto& s : surface) s = u(rng);
            LabelMap markers{w, h, std::vector<std::int32_t>(w * h, 0)};
            for (int k = 1; k <= 4; ++k) markers.labels[rng() % (w * h)] = k;
            auto out = watershed(surface, markers);
            REQUIRE(out.labels.size() == w * h);
            for (std::size_t i = 0; i < w * h; ++i) {
                CHECK(out.labels[i] >= 0);
                CHECK(out.labels[i] <= 4);
                if (out.labels[i] != 0) continue;
                std::set<std::int32_t> adj;
                const std::size_t y = i / w, x = i % w;
                if (y > 0) adj.insert(out.labels[i - w]);
                if (y + 1 < h) adj.insert(out.labels[i + w]);
                if (x > 0) adj.insert(out.labels[i - 1]);
                if (x + 1 < w) adj.insert(out.labels[i + 1]);
                adj.erase(0);
                CHECK(adj.size() >= 2);
            }
        }
    }

    SUBCASE("bright blob is separated from the background")
    {
        const std::size_t w = 32, h = 32;
        std::vector<std::uint8_t> img(w * h, 30);
        for (std::size_t y = 10; y < 22; ++y) {
            for (std::size_t x = 8; x < 24; ++x) img[y * w + x] = 200;
        }
        auto fg = watershed_segment(img, w, h);
        std::vector<std::uint8_t> truth(w * h);
        for (std::size_t i = 0; i < w * h; ++i) truth[i] = img[i] > 100;
        CHECK(binary_accuracy(fg, truth) > 0.9);
    }
}

TEST_CASE("method front end")
{
    for (auto m : kAllMethods) CHECK(parse_method(method_name(m)) == m);
    CHECK_THROWS_AS(parse_method("kmeans"), UsageError);

    const std::size_t w = 16, h = 16;
    std::vector<std::uint8_t> img(w * h, 20);
    for (std::size_t i = 0; i < 60; ++i) img[i + 80] = 220;
    for (auto m : kAllMethods) {
        auto r = segment_classical(img, w, h, m);
        CHECK(r.foreground.size() == w * h);
        CHECK(r.threshold.has_value() == (m != Method::watershed));
    }
}
