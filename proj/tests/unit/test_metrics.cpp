#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "gradcheck.hpp"
#include "insitu/errors.hpp"
#include "insitu/metrics/metrics.hpp"

using namespace insitu;
using namespace insitu::metrics;
using insitu::testing::random_tensor;

namespace {

// Direct 2-D windowed SSIM with explicit mirrored indexing.
double ssim_oracle(const Tensor& a, const Tensor& b, double peak)
{
    const long h = long(a.shape()[a.rank() - 2]), w = long(a.shape()[a.rank() - 1]);
    auto x = a.data();
    auto y = b.data();
    double g[11][11], gs = 0;
    for (int i = 0; i < 11; ++i) {
        for (int j = 0; j < 11; ++j) gs += g[i][j] = std::exp(-((i - 5) * (i - 5) + (j - 5) * (j - 5)) / 4.5);
    }
    auto mirror = [](long i, long n) {
        if (i < 0) return -i - 1;
        if (i >= n) return 2 * n - i - 1;
        return i;
    };
    const double c1 = std::pow(0.01 * peak, 2), c2 = std::pow(0.03 * peak, 2);
    double total = 0;
    for (long r = 0; r < h; ++r) {
        for (long c = 0; c < w; ++c) {
            double mx = 0, my = 0, sxx = 0, syy = 0, sxy = 0;
            for (int i = 0; i < 11; ++i) {
                for (int j = 0; j < 11; ++j) {
                    const long k = mirror(r + i - 5, h) * w + mirror(c + j - 5, w);
                    const double wt = g[i][j] / gs;
                    mx += wt * x[k];
                    my += wt * y[k];
                    sxx += wt * x[k] * x[k];
                    syy += wt * y[k] * y[k];
                    sxy += wt * x[k] * y[k];
                }
            }
            const double vx = sxx - mx * mx, vy = syy - my * my, cv = sxy - mx * my;
            total += (2 * mx * my + c1) * (2 * cv + c2) / ((mx * mx + my * my + c1) * (vx + vy + c2));
        }
    }
    return total / double(h * w);
}

} // namespace

TEST_CASE("psnr")
{
    std::mt19937_64 rng(11);
    auto a = random_tensor({1, 16, 16}, rng, 0.0, 1.0, false);
    CHECK(std::isinf(psnr(a, a)));
    CHECK(psnr(a, a) > 0);

    std::vector<double> v(64), u(64);
    for (std::size_t i = 0; i < 64; ++i) {
        v[i] = double(i * 3);
        u[i] = v[i] + (i % 2 ? 1.0 : -1.0);
    }
    CHECK(std::abs(psnr(Tensor::from({8, 8}, v), Tensor::from({8, 8}, u), 255.0) - 48.1308) < 1e-4);

    CHECK_THROWS_AS(psnr(Tensor::zeros({2, 3}), Tensor::zeros({3, 2})), ShapeError);

    SUBCASE("strictly decreasing with noise amplitude")
    {
        auto img = random_tensor({1, 32, 32}, rng, 0.2, 0.8, false);
        auto noise = random_tensor({1, 32, 32}, rng, -1.0, 1.0, false);
        double prev = kInfinity;
        for (double amp : {0.01, 0.02, 0.05, 0.1, 0.2}) {
            std::vector<double> n(img.data().begin(), img.data().end());
            for (std::size_t i = 0; i < n.size(); ++i) n[i] += amp * noise.data()[i];
            const double p = psnr(img, Tensor::from(img.shape(), n));
            CHECK(p < prev);
            prev = p;
        }
    }

    SUBCASE("invariant under a shared pixel permutation")
    {
        auto x = random_tensor({1, 12, 12}, rng, 0.0, 1.0, false);
        auto y = random_tensor({1, 12, 12}, rng, 0.0, 1.0, false);
        std::vector<std::size_t> perm(144);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        std::vector<double> px(144), py(144);
        for (std::size_t i = 0; i < 144; ++i) {
            px[i] = x.data()[perm[i]];
            py[i] = y.data()[perm[i]];
        }
        CHECK(psnr(Tensor::from(x.shape(), px), Tensor::from(y.shape(), py)) ==
              doctest::Approx(psnr(x, y)).epsilon(1e-12));
    }
}

TEST_CASE("ssim")
{
    std::mt19937_64 rng(12);
    auto a = random_tensor({1, 20, 17}, rng, 0.0, 1.0, false);
    auto b = random_tensor({1, 20, 17}, rng, 0.0, 1.0, false);

    CHECK(std::abs(ssim(a, a) - 1.0) < 1e-12);
    CHECK(ssim(a, b) == doctest::Approx(ssim(b, a)).epsilon(1e-14));
    CHECK(ssim(a, b) == doctest::Approx(ssim_oracle(a, b, 1.0)).epsilon(1e-10));

    const double s = ssim(a, b);
    CHECK(s >= -1.0);
    CHECK(s <= 1.0);

    SUBCASE("inverted image scores below 1")
    {
        std::vector<double> v(a.data().begin(), a.data().end()), inv(v.size());
        for (auto& x : v) x = x < 0.5 ? x * 0.8 : 0.2 + x * 0.8; // keep away from mid-gray
        for (std::size_t i = 0; i < v.size(); ++i) inv[i] = 1.0 - v[i];
        const double si = ssim(Tensor::from(a.shape(), v), Tensor::from(a.shape(), inv));
        CHECK(si < 1.0);
        CHECK(si >= -1.0);
    }

    SUBCASE("8-bit peak")
    {
        std::vector<double> v(a.data().begin(), a.data().end()), w(b.data().begin(), b.data().end());
        for (auto& x : v) x *= 255;
        for (auto& x : w) x *= 255;
        CHECK(ssim(Tensor::from(a.shape(), v), Tensor::from(a.shape(), w), 255.0) ==
              doctest::Approx(ssim(a, b)).epsilon(1e-10));
    }

    CHECK_THROWS_AS(ssim(Tensor::zeros({1, 10, 20}), Tensor::zeros({1, 10, 20})), ShapeError);
    CHECK_THROWS_AS(ssim(Tensor::zeros({3, 20, 20}), Tensor::zeros({3, 20, 20})), ShapeError);
}

TEST_CASE("mean_over_sequence")
{
    auto one = mean_over_sequence({{"a", 31.0, 0.9}});
    CHECK(one.mean_psnr_db == 31.0);
    CHECK(one.mean_ssim == 0.9);
    CHECK(one.frames == 1);

    auto two = mean_over_sequence({{"a", 30.0, 0.8}, {"b", 40.0, 1.0}});
    CHECK(two.mean_psnr_db == doctest::Approx(35.0));
    CHECK(two.mean_ssim == doctest::Approx(0.9));

    auto inf = mean_over_sequence({{"a", 30.0, 0.8}, {"b", kInfinity, 1.0}, {"c", 34.0, 0.9}});
    CHECK(inf.mean_psnr_db == doctest::Approx(32.0));
    CHECK(inf.infinity_count == 1);
    CHECK(inf.frames == 3);

    CHECK_THROWS_AS(mean_over_sequence({}), DataError);
}
