#include "insitu/tensor/optim.hpp"

#include <cmath>

namespace insitu::tensor {

Adam::Adam(std::vector<Tensor> params, AdamOptions options) : params_(std::move(params)), options_(options)
{
    for (const auto& p : params_) {
        m_.emplace_back(p.numel(), 0.0);
        v_.emplace_back(p.numel(), 0.0);
    }
}

void Adam::zero_grad()
{
    for (auto& p : params_) p.zero_grad();
}

void Adam::step()
{
    ++t_;
    const double bc1 = 1.0 - std::pow(options_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(options_.beta2, static_cast<double>(t_));
    for (std::size_t k = 0; k < params_.size(); ++k) {
        auto w = params_[k].mutable_data();
        auto g = params_[k].grad();
        auto& m = m_[k];
        auto& v = v_[k];
        for (std::size_t i = 0; i < w.size(); ++i) {
            m[i] = options_.beta1 * m[i] + (1.0 - options_.beta1) * g[i];
            v[i] = options_.beta2 * v[i] + (1.0 - options_.beta2) * g[i] * g[i];
            w[i] -= options_.lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + options_.epsilon);
        }
    }
}

} // namespace insitu::tensor
