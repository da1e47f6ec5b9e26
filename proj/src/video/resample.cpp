#include "insitu/video/resample.hpp"

#include "insitu/tensor/kernels.hpp"

namespace insitu::video {

namespace {

void require_image(const Tensor& t, const char* what)
{
    if (t.rank() != 3) throw ShapeError(std::string(what) + ": expected [C, H, W], got " + tensor::shape_str(t.shape()));
}

} // namespace

Tensor downscale_nearest(const Tensor& frame, std::size_t r)
{
    require_image(frame, "downscale_nearest");
    const std::size_t c = frame.dim(0), ih = frame.dim(1), iw = frame.dim(2);
    if (r == 0 || ih % r != 0 || iw % r != 0) {
        throw ShapeError("downscale_nearest: " + std::to_string(ih) + "x" + std::to_string(iw) +
                         " not divisible by r = " + std::to_string(r));
    }
    const std::size_t h = ih / r, w = iw / r;
    auto in = frame.data();
    std::vector<double> out(c * h * w);
    for (std::size_t k = 0; k < c; ++k) {
        for (std::size_t y = 0; y < h; ++y) {
            for (std::size_t x = 0; x < w; ++x) out[(k * h + y) * w + x] = in[(k * ih + y * r) * iw + x * r];
        }
    }
    return Tensor::from({c, h, w}, std::move(out));
}

Tensor upscale_nearest(const Tensor& frame, std::size_t r)
{
    require_image(frame, "upscale_nearest");
    if (r == 0) throw ShapeError("upscale_nearest: r must be >= 1");
    const std::size_t c = frame.dim(0), h = frame.dim(1), w = frame.dim(2);
    std::vector<double> out(c * h * w * r * r);
    kernels::upsample_nearest(frame.data().data(), c, h, w, r, out.data());
    return Tensor::from({c, h * r, w * r}, std::move(out));
}

Tensor upscale_bicubic(const Tensor& frame, std::size_t r)
{
    require_image(frame, "upscale_bicubic");
    if (r == 0) throw ShapeError("upscale_bicubic: r must be >= 1");
    const std::size_t c = frame.dim(0), h = frame.dim(1), w = frame.dim(2);
    std::vector<double> out(c * h * w * r * r);
    kernels::upscale_bicubic(frame.data().data(), c, h, w, r, out.data());
    return Tensor::from({c, h * r, w * r}, std::move(out));
}

} // namespace insitu::video
