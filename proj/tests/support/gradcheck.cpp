#include "gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "insitu/tensor/ops.hpp"

namespace insitu::testing {

namespace {

// Central differences at h and h/10 agree to about h^2 on smooth stretches.
constexpr double kSmoothAgreement = 1e-6;

} // namespace

double relative_error(double analytic, double numeric, double floor)
{
    return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

GradCheckResult check_gradients(std::vector<tensor::Tensor> leaves, const std::function<tensor::Tensor()>& loss,
                                std::uint64_t seed, double h, std::size_t max_per_leaf, std::size_t refinements)
{
    for (auto& l : leaves) l.zero_grad();
    loss().backward();
    std::vector<std::vector<double>> analytic;
    for (auto& l : leaves) analytic.emplace_back(l.grad().begin(), l.grad().end());

    std::mt19937_64 rng(seed);
    GradCheckResult result;
    tensor::NoGradGuard no_grad;
    for (std::size_t k = 0; k < leaves.size(); ++k) {
        auto data = leaves[k].mutable_data();
        std::vector<std::size_t> idx(data.size());
        std::iota(idx.begin(), idx.end(), 0);
        if (idx.size() > max_per_leaf) {
            std::shuffle(idx.begin(), idx.end(), rng);
            idx.resize(max_per_leaf);
        }
        for (auto i : idx) {
            const double orig = data[i];
            auto central = [&](double step) {
                data[i] = orig + step;
                const double plus = loss().item();
                data[i] = orig - step;
                const double minus = loss().item();
                data[i] = orig;
                return (plus - minus) / (2.0 * step);
            };
            double step = h;
            double numeric = central(step);
            for (std::size_t level = 0; level < refinements; ++level) {
                const double finer = central(step / 10.0);
                if (relative_error(finer, numeric) <= kSmoothAgreement) break;
                step /= 10.0;
                numeric = finer;
                ++result.refined;
            }
            const double err = relative_error(analytic[k][i], numeric);
            ++result.checked;
            if (err > result.max_rel_error) {
                result.max_rel_error = err;
                result.worst = std::to_string(k) + "#" + std::to_string(i);
            }
        }
    }
    return result;
}

tensor::Tensor random_tensor(tensor::Shape shape, std::mt19937_64& rng, double lo, double hi, bool requires_grad)
{
    std::uniform_real_distribution<double> dist(lo, hi);
    std::vector<double> v(tensor::shape_numel(shape));
    for (auto& x : v) x = dist(rng);
    return tensor::Tensor::from(std::move(shape), std::move(v), requires_grad);
}

tensor::Tensor weighted_sum(const tensor::Tensor& t, const tensor::Tensor& weights)
{
    return tensor::sum(tensor::mul(t, weights));
}

} // namespace insitu::testing
