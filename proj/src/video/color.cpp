#include "insitu/video/color.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

namespace insitu::video {

namespace {

struct Transform {
    Eigen::Matrix3d forward; // applied to RGB in [0, 1], result on 0-255 scale
    Eigen::Vector3d offset;
    Eigen::Matrix3d inverse;
};

Transform make_transform(ColorRange range)
{
    Transform t;
    if (range == ColorRange::studio) {
        t.forward << 65.481, 128.553, 24.966,
                     -37.797, -74.203, 112.0,
                     112.0, -93.786, -18.214;
        t.offset << 16.0, 128.0, 128.0;
    } else {
        t.forward << 0.299, 0.587, 0.114,
                     -0.168736, -0.331264, 0.5,
                     0.5, -0.418688, -0.081312;
        t.forward *= 255.0;
        t.offset << 0.0, 128.0, 128.0;
    }
    t.inverse = t.forward.inverse();
    return t;
}

const Transform& transform(ColorRange range)
{
    static const Transform studio = make_transform(ColorRange::studio);
    static const Transform full = make_transform(ColorRange::full);
    return range == ColorRange::studio ? studio : full;
}

void require_three_planes(const Tensor& t, const char* what)
{
    if (t.rank() != 3 || t.dim(0) != 3) {
        throw ShapeError(std::string(what) + ": expected [3, H, W], got " + tensor::shape_str(t.shape()));
    }
}

} // namespace

Tensor rgb_to_ycbcr(const Tensor& rgb, ColorRange range, std::size_t* clamped)
{
    require_three_planes(rgb, "rgb_to_ycbcr");
    const auto& tf = transform(range);
    const std::size_t plane = rgb.dim(1) * rgb.dim(2);
    auto in = rgb.data();
    std::vector<double> out(in.size());
    for (std::size_t p = 0; p < plane; ++p) {
        Eigen::Vector3d c;
        for (int k = 0; k < 3; ++k) {
            double v = in[k * plane + p];
            if (v < 0.0 || v > 1.0) {
                v = std::clamp(v, 0.0, 1.0);
                if (clamped) ++*clamped;
            }
            c[k] = v;
        }
        const Eigen::Vector3d y = (tf.forward * c + tf.offset) / 255.0;
        for (int k = 0; k < 3; ++k) out[k * plane + p] = y[k];
    }
    return Tensor::from(rgb.shape(), std::move(out));
}

Tensor ycbcr_to_rgb(const Tensor& ycbcr, ColorRange range, std::size_t* clamped)
{
    require_three_planes(ycbcr, "ycbcr_to_rgb");
    const auto& tf = transform(range);
    const std::size_t plane = ycbcr.dim(1) * ycbcr.dim(2);
    auto in = ycbcr.data();
    std::vector<double> out(in.size());
    for (std::size_t p = 0; p < plane; ++p) {
        Eigen::Vector3d y;
        for (int k = 0; k < 3; ++k) y[k] = in[k * plane + p] * 255.0;
        const Eigen::Vector3d c = tf.inverse * (y - tf.offset);
        for (int k = 0; k < 3; ++k) {
            double v = c[k];
            if (v < 0.0 || v > 1.0) {
                v = std::clamp(v, 0.0, 1.0);
                if (clamped) ++*clamped;
            }
            out[k * plane + p] = v;
        }
    }
    return Tensor::from(ycbcr.shape(), std::move(out));
}

Tensor luma(const Tensor& rgb, ColorRange range)
{
    require_three_planes(rgb, "luma");
    const auto& tf = transform(range);
    const std::size_t h = rgb.dim(1), w = rgb.dim(2), plane = h * w;
    auto in = rgb.data();
    std::vector<double> out(plane);
    for (std::size_t p = 0; p < plane; ++p) {
        double acc = tf.offset[0];
        for (int k = 0; k < 3; ++k) acc += tf.forward(0, k) * std::clamp(in[k * plane + p], 0.0, 1.0);
        out[p] = acc / 255.0;
    }
    return Tensor::from({1, h, w}, std::move(out));
}

Tensor image_to_tensor(const Image8& image)
{
    const std::size_t c = image.channels, h = image.height, w = image.width;
    std::vector<double> out(c * h * w);
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            for (std::size_t k = 0; k < c; ++k) out[(k * h + y) * w + x] = image.at(y, x, k) / 255.0;
        }
    }
    return Tensor::from({c, h, w}, std::move(out));
}

std::uint8_t quantize_unit(double v)
{
    return static_cast<std::uint8_t>(std::floor(std::clamp(v, 0.0, 1.0) * 255.0 + 0.5));
}

Image8 tensor_to_image(const Tensor& t)
{
    if (t.rank() != 3 || (t.dim(0) != 1 && t.dim(0) != 3)) {
        throw ShapeError("tensor_to_image: expected [1|3, H, W], got " + tensor::shape_str(t.shape()));
    }
    Image8 img;
    img.channels = t.dim(0);
    img.height = t.dim(1);
    img.width = t.dim(2);
    img.pixels.resize(img.channels * img.height * img.width);
    auto in = t.data();
    for (std::size_t y = 0; y < img.height; ++y) {
        for (std::size_t x = 0; x < img.width; ++x) {
            for (std::size_t k = 0; k < img.channels; ++k) {
                img.at(y, x, k) = quantize_unit(in[(k * img.height + y) * img.width + x]);
            }
        }
    }
    return img;
}

} // namespace insitu::video
