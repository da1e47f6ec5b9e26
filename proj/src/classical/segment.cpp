#include "insitu/classical/segment.hpp"

#include "insitu/classical/threshold.hpp"
#include "insitu/classical/watershed.hpp"
#include "insitu/errors.hpp"
#include "insitu/video/color.hpp"

namespace insitu::classical {

std::string_view method_name(Method m)
{
    switch (m) {
    case Method::triangle: return "triangle";
    case Method::maxentropy: return "maxentropy";
    case Method::otsu: return "otsu";
    case Method::watershed: return "watershed";
    case Method::bgt: return "bgt";
    }
    return "?";
}

Method parse_method(std::string_view name)
{
    for (auto m : kAllMethods) {
        if (method_name(m) == name) return m;
    }
    throw UsageError("unknown classical method '" + std::string(name) + "'");
}

ClassicalResult segment_classical(std::span<const std::uint8_t> pixels, std::size_t width, std::size_t height,
                                  Method method)
{
    if (pixels.size() != width * height) throw ShapeError("segment_classical: pixel count does not match size");
    ClassicalResult r;
    const auto hist = Histogram256::of(pixels);
    switch (method) {
    case Method::triangle: r.threshold = triangle_threshold(hist); break;
    case Method::maxentropy: r.threshold = max_entropy_threshold(hist); break;
    case Method::otsu: r.threshold = otsu_threshold(hist); break;
    case Method::bgt: r.threshold = basic_global_threshold(hist).threshold; break;
    case Method::watershed: r.foreground = watershed_segment(pixels, width, height); return r;
    }
    r.foreground = segment_by_threshold(pixels, *r.threshold);
    return r;
}

std::vector<std::uint8_t> to_gray8(const tensor::Tensor& frame)
{
    const auto& s = frame.shape();
    if (!(s.size() == 2 || (s.size() == 3 && s[0] == 1))) {
        throw ShapeError("to_gray8: expected a single-channel frame, got " + tensor::shape_str(s));
    }
    std::vector<std::uint8_t> out(frame.numel());
    auto v = frame.data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = video::quantize_unit(v[i]);
    return out;
}

double binary_accuracy(std::span<const std::uint8_t> foreground, std::span<const std::uint8_t> ground_truth)
{
    if (foreground.size() != ground_truth.size() || foreground.empty()) {
        throw ShapeError("binary_accuracy: masks differ in size");
    }
    std::size_t agree = 0;
    for (std::size_t i = 0; i < foreground.size(); ++i) agree += (foreground[i] != 0) == (ground_truth[i] != 0);
    return static_cast<double>(agree) / static_cast<double>(foreground.size());
}

} // namespace insitu::classical
