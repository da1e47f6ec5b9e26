#include "insitu/tensor/layers.hpp"

#include <cmath>
#include <string>

namespace insitu::tensor {

void he_uniform(Tensor& weight, std::size_t fan_in, Rng& rng)
{
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (auto& w : weight.mutable_data()) w = dist(rng);
}

Conv2dLayer Conv2dLayer::create(std::size_t in_ch, std::size_t out_ch, std::size_t kernel, Rng& rng)
{
    if (kernel % 2 == 0) throw ShapeError("conv kernels must be odd, got " + std::to_string(kernel));
    Conv2dLayer l;
    l.weight = Tensor::zeros({out_ch, in_ch, kernel, kernel}, true);
    l.bias = Tensor::zeros({out_ch}, true);
    l.padding = kernel / 2;
    he_uniform(l.weight, in_ch * kernel * kernel, rng);
    return l;
}

Conv3dLayer Conv3dLayer::create(std::size_t in_ch, std::size_t out_ch, std::size_t kernel_t, std::size_t kernel_s,
                                std::size_t pad_t, Rng& rng)
{
    if (kernel_t % 2 == 0 || kernel_s % 2 == 0) throw ShapeError("conv kernels must be odd");
    Conv3dLayer l;
    l.weight = Tensor::zeros({out_ch, in_ch, kernel_t, kernel_s, kernel_s}, true);
    l.bias = Tensor::zeros({out_ch}, true);
    l.pad_t = pad_t;
    l.pad_s = kernel_s / 2;
    he_uniform(l.weight, in_ch * kernel_t * kernel_s * kernel_s, rng);
    return l;
}

BatchNormLayer BatchNormLayer::create(std::size_t channels)
{
    BatchNormLayer l;
    l.gamma = Tensor::full({channels}, 1.0, true);
    l.beta = Tensor::zeros({channels}, true);
    l.running_mean = Tensor::zeros({channels});
    l.running_var = Tensor::full({channels}, 1.0);
    return l;
}

kernels::ConvGeometry conv2d_geometry(const Shape& input, const Conv2dLayer& layer)
{
    const Shape& w = layer.weight.shape();
    if (input.size() != 3 || w.size() != 4 || input[0] != w[1]) {
        throw ShapeError("conv2d: input " + shape_str(input) + " does not match weight " + shape_str(w));
    }
    if (layer.stride == 0) throw ShapeError("conv2d: stride must be >= 1");
    kernels::ConvGeometry g;
    g.in_c = input[0];
    g.in_h = input[1];
    g.in_w = input[2];
    g.out_c = w[0];
    g.kh = w[2];
    g.kw = w[3];
    g.sh = g.sw = layer.stride;
    g.ph = g.pw = layer.padding;
    if (!g.valid()) throw ShapeError("conv2d: kernel " + shape_str(w) + " larger than padded input " + shape_str(input));
    return g;
}

kernels::ConvGeometry conv3d_geometry(const Shape& input, const Conv3dLayer& layer)
{
    const Shape& w = layer.weight.shape();
    if (input.size() != 4 || w.size() != 5 || input[0] != w[1]) {
        throw ShapeError("conv3d: input " + shape_str(input) + " does not match weight " + shape_str(w));
    }
    if (layer.stride_t == 0 || layer.stride_s == 0) throw ShapeError("conv3d: stride must be >= 1");
    kernels::ConvGeometry g;
    g.in_c = input[0];
    g.in_t = input[1];
    g.in_h = input[2];
    g.in_w = input[3];
    g.out_c = w[0];
    g.kt = w[2];
    g.kh = w[3];
    g.kw = w[4];
    g.st = layer.stride_t;
    g.sh = g.sw = layer.stride_s;
    g.pt = layer.pad_t;
    g.ph = g.pw = layer.pad_s;
    if (!g.valid()) throw ShapeError("conv3d: kernel " + shape_str(w) + " larger than padded input " + shape_str(input));
    return g;
}

namespace {

Tensor run_conv(const char* op, const kernels::ConvGeometry& g, Shape out_shape, const Tensor& input,
                const Tensor& weight, const Tensor& bias)
{
    if (bias.numel() != g.out_c) throw ShapeError(std::string(op) + ": bias size does not match output channels");
    std::vector<double> out(g.out_count());
    kernels::conv_forward(g, input.data().data(), weight.data().data(), bias.data().data(), out.data());
    return make_result(op, std::move(out_shape), std::move(out), {input, weight, bias}, [g](detail::Node& self) {
        auto grad_of = [&](std::size_t i) -> double* {
            auto& n = *self.inputs[i];
            return n.requires_grad ? n.grad_buffer().data() : nullptr;
        };
        kernels::conv_backward(g, self.inputs[0]->value.data(), self.inputs[1]->value.data(), self.grad.data(),
                               grad_of(0), grad_of(1), grad_of(2));
    });
}

} // namespace

Tensor conv2d(const Tensor& input, const Conv2dLayer& layer)
{
    const auto g = conv2d_geometry(input.shape(), layer);
    return run_conv("conv2d", g, {g.out_c, g.out_h(), g.out_w()}, input, layer.weight, layer.bias);
}

Tensor conv3d(const Tensor& input, const Conv3dLayer& layer)
{
    const auto g = conv3d_geometry(input.shape(), layer);
    return run_conv("conv3d", g, {g.out_c, g.out_t(), g.out_h(), g.out_w()}, input, layer.weight, layer.bias);
}

Tensor batch_norm(const Tensor& input, BatchNormLayer& layer, bool training)
{
    const Shape& s = input.shape();
    if (s.size() < 2) throw ShapeError("batch_norm: input " + shape_str(s) + " has no spatial extent");
    const std::size_t channels = s[0];
    if (layer.channels() != channels) {
        throw ShapeError("batch_norm: layer has " + std::to_string(layer.channels()) + " channels, input " +
                         shape_str(s));
    }
    const std::size_t inner = input.numel() / channels;
    auto x = input.data();
    auto gamma = layer.gamma.data();
    auto beta = layer.beta.data();

    std::vector<double> mean(channels), inv_std(channels);
    if (training) {
        auto rm = layer.running_mean.mutable_data();
        auto rv = layer.running_var.mutable_data();
        for (std::size_t c = 0; c < channels; ++c) {
            const double* xc = x.data() + c * inner;
            double m = 0.0;
            for (std::size_t i = 0; i < inner; ++i) m += xc[i];
            m /= static_cast<double>(inner);
            double v = 0.0;
            for (std::size_t i = 0; i < inner; ++i) v += (xc[i] - m) * (xc[i] - m);
            v /= static_cast<double>(inner);
            mean[c] = m;
            inv_std[c] = 1.0 / std::sqrt(v + layer.epsilon);
            const double unbiased = inner > 1 ? v * static_cast<double>(inner) / static_cast<double>(inner - 1) : v;
            rm[c] = (1.0 - layer.momentum) * rm[c] + layer.momentum * m;
            rv[c] = (1.0 - layer.momentum) * rv[c] + layer.momentum * unbiased;
        }
    } else {
        auto rm = layer.running_mean.data();
        auto rv = layer.running_var.data();
        for (std::size_t c = 0; c < channels; ++c) {
            mean[c] = rm[c];
            inv_std[c] = 1.0 / std::sqrt(rv[c] + layer.epsilon);
        }
    }

    std::vector<double> xhat(x.size()), out(x.size());
    for (std::size_t c = 0; c < channels; ++c) {
        for (std::size_t i = 0; i < inner; ++i) {
            const std::size_t j = c * inner + i;
            xhat[j] = (x[j] - mean[c]) * inv_std[c];
            out[j] = gamma[c] * xhat[j] + beta[c];
        }
    }

    return make_result(
        "batch_norm", s, std::move(out), {input, layer.gamma, layer.beta},
        [xhat = std::move(xhat), inv_std = std::move(inv_std), channels, inner, training](detail::Node& self) {
            const auto& dy = self.grad;
            const auto& gamma = self.inputs[1]->value;
            auto grad_of = [&](std::size_t i) -> double* {
                auto& n = *self.inputs[i];
                return n.requires_grad ? n.grad_buffer().data() : nullptr;
            };
            double* gx = grad_of(0);
            double* gg = grad_of(1);
            double* gb = grad_of(2);
            const double n = static_cast<double>(inner);
            for (std::size_t c = 0; c < channels; ++c) {
                double sum_dy = 0.0, sum_dy_xhat = 0.0;
                for (std::size_t i = 0; i < inner; ++i) {
                    const std::size_t j = c * inner + i;
                    sum_dy += dy[j];
                    sum_dy_xhat += dy[j] * xhat[j];
                }
                if (gg) gg[c] += sum_dy_xhat;
                if (gb) gb[c] += sum_dy;
                if (!gx) continue;
                const double k = gamma[c] * inv_std[c];
                if (training) {
                    for (std::size_t i = 0; i < inner; ++i) {
                        const std::size_t j = c * inner + i;
                        gx[j] += k * (dy[j] - sum_dy / n - xhat[j] * sum_dy_xhat / n);
                    }
                } else {
                    for (std::size_t i = 0; i < inner; ++i) gx[c * inner + i] += k * dy[c * inner + i];
                }
            }
        });
}

} // namespace insitu::tensor
