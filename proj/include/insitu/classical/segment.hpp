#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "insitu/tensor/tensor.hpp"

namespace insitu::classical {

enum class Method { triangle, maxentropy, otsu, watershed, bgt };

inline constexpr Method kAllMethods[] = {Method::triangle, Method::maxentropy, Method::otsu, Method::watershed,
                                         Method::bgt};

std::string_view method_name(Method m);
/// UsageError on an unknown name.
Method parse_method(std::string_view name);

struct ClassicalResult {
    std::vector<std::uint8_t> foreground; // 0/1 per pixel
    std::optional<double> threshold;      // absent for watershed
};

/// Runs one method on an 8-bit gray image.
ClassicalResult segment_classical(std::span<const std::uint8_t> pixels, std::size_t width, std::size_t height,
                                  Method method);

/// [1, H, W] in [0, 1] -> 8-bit gray.
std::vector<std::uint8_t> to_gray8(const tensor::Tensor& frame);

/// Agreement between a binary foreground and (ground truth != 0).
double binary_accuracy(std::span<const std::uint8_t> foreground, std::span<const std::uint8_t> ground_truth);

} // namespace insitu::classical
