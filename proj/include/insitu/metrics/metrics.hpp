#pragma once

#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "insitu/tensor/tensor.hpp"

namespace insitu::metrics {

using tensor::Tensor;

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// 10 log10(peak^2 / MSE); +inf when the images are identical.
double psnr(const Tensor& a, const Tensor& b, double peak = 1.0);

/// Mean local SSIM, 11x11 Gaussian window (sigma 1.5), symmetric borders.
/// Inputs are [H, W] or [1, H, W].
double ssim(const Tensor& a, const Tensor& b, double peak = 1.0);

struct QualityReport {
    std::string frame_id;
    double psnr_db = 0.0;
    double ssim = 0.0;
};

QualityReport evaluate(const std::string& frame_id, const Tensor& estimate, const Tensor& reference,
                       double peak = 1.0);

struct SequenceSummary {
    double mean_psnr_db = 0.0; // over finite values only
    double mean_ssim = 0.0;
    std::size_t frames = 0;
    std::size_t infinity_count = 0;
};

SequenceSummary mean_over_sequence(const std::vector<QualityReport>& reports);

} // namespace insitu::metrics
