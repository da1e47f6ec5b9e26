#include "insitu/sr/fusion.hpp"

#include <cmath>
#include <string>

#include "insitu/tensor/kernels.hpp"

namespace insitu::sr {

using tensor::Shape;
using tensor::shape_str;
using tensor::detail::Node;

namespace {

double* input_grad(Node& self, std::size_t i)
{
    auto& in = *self.inputs[i];
    return in.requires_grad ? in.grad_buffer().data() : nullptr;
}

} // namespace

Tensor positional_encoding(std::size_t height, std::size_t width, std::size_t frames)
{
    const std::size_t hw = height * width, plane = frames * hw;
    std::vector<double> v(3 * plane);
    for (std::size_t i = 0; i < frames; ++i) {
        const double t = std::sin(static_cast<double>(i) / static_cast<double>(frames) - 0.5);
        for (std::size_t y = 0; y < height; ++y) {
            const double vy = std::sin(static_cast<double>(y) / static_cast<double>(height) - 0.5);
            for (std::size_t x = 0; x < width; ++x) {
                const std::size_t p = i * hw + y * width + x;
                v[p] = std::sin(static_cast<double>(x) / static_cast<double>(width) - 0.5);
                v[plane + p] = vy;
                v[2 * plane + p] = t;
            }
        }
    }
    return Tensor::from({3, frames, height, width}, std::move(v));
}

Fusion vit_fusion(const Tensor& q, const Tensor& k, const Tensor& v, std::size_t ref, bool channel_dot)
{
    const Shape& qs = q.shape();
    const Shape& ks = k.shape();
    const Shape& vs = v.shape();
    const bool ok = qs.size() == 4 && ks.size() == 4 && vs.size() == 4 && qs[1] == 1 && ks[0] == qs[0] &&
                    vs[0] == qs[0] && vs[1] == ks[1] + 1 && ks[2] == qs[2] && vs[2] == qs[2] &&
                    ks[3] == qs[3] && vs[3] == qs[3] && ref < vs[1];
    if (!ok) {
        throw ShapeError("vit_fusion: incompatible q " + shape_str(qs) + ", k " + shape_str(ks) + ", v " +
                         shape_str(vs));
    }
    const std::size_t c = qs[0], n = ks[1], h = qs[2], w = qs[3], hw = h * w;
    std::vector<double> out(c * hw), weights(c * n * hw);
    kernels::temporal_fusion(q.data().data(), k.data().data(), v.data().data(), c, n, ref, hw, channel_dot,
                             out.data(), weights.data());

    Fusion f;
    f.weights = Tensor::from({c, n, h, w}, weights);
    f.fused = tensor::make_result(
        "vit_fusion", {c, h, w}, std::move(out), {q, k, v},
        [weights = std::move(weights), c, n, hw, ref, channel_dot](Node& self) {
            const auto& g = self.grad;
            const double* qv = self.inputs[0]->value.data();
            const double* kv = self.inputs[1]->value.data();
            const double* vv = self.inputs[2]->value.data();
            double* gq = input_grad(self, 0);
            double* gk = input_grad(self, 1);
            double* gv = input_grad(self, 2);
            const std::size_t slices = n + 1;
            auto vslice = [&](std::size_t i) { return i < ref ? i : i + 1; };

            if (gv) {
                for (std::size_t ch = 0; ch < c; ++ch) {
                    for (std::size_t p = 0; p < hw; ++p) {
                        gv[(ch * slices + ref) * hw + p] += g[ch * hw + p];
                        for (std::size_t i = 0; i < n; ++i) {
                            gv[(ch * slices + vslice(i)) * hw + p] += weights[(ch * n + i) * hw + p] * g[ch * hw + p];
                        }
                    }
                }
            }
            if (n == 0 || (!gq && !gk)) return;

            // dL/ds_i = g * w_i * (v_i - sum_j w_j v_j), per channel or summed
            std::vector<double> gs(c * n * hw, 0.0);
            for (std::size_t ch = 0; ch < c; ++ch) {
                for (std::size_t p = 0; p < hw; ++p) {
                    double avg = 0.0;
                    for (std::size_t i = 0; i < n; ++i) {
                        avg += weights[(ch * n + i) * hw + p] * vv[(ch * slices + vslice(i)) * hw + p];
                    }
                    for (std::size_t i = 0; i < n; ++i) {
                        const double wi = weights[(ch * n + i) * hw + p];
                        gs[(ch * n + i) * hw + p] = g[ch * hw + p] * wi * (vv[(ch * slices + vslice(i)) * hw + p] - avg);
                    }
                }
            }
            if (channel_dot) {
                std::vector<double> shared(n * hw, 0.0);
                for (std::size_t ch = 0; ch < c; ++ch) {
                    for (std::size_t j = 0; j < n * hw; ++j) shared[j] += gs[ch * n * hw + j];
                }
                for (std::size_t ch = 0; ch < c; ++ch) {
                    for (std::size_t j = 0; j < n * hw; ++j) gs[ch * n * hw + j] = shared[j];
                }
            }
            for (std::size_t ch = 0; ch < c; ++ch) {
                for (std::size_t i = 0; i < n; ++i) {
                    for (std::size_t p = 0; p < hw; ++p) {
                        const std::size_t ki = (ch * n + i) * hw + p;
                        if (gq) gq[ch * hw + p] += gs[ki] * kv[ki];
                        if (gk) gk[ki] += gs[ki] * qv[ch * hw + p];
                    }
                }
            }
        });
    return f;
}

Tensor temporal_mix(const Tensor& v, const Tensor& mix)
{
    const Shape& vs = v.shape();
    if (vs.size() != 4 || mix.shape() != Shape{vs[0], vs[1]}) {
        throw ShapeError("temporal_mix: v " + shape_str(vs) + " does not match mix " + shape_str(mix.shape()));
    }
    const std::size_t c = vs[0], t = vs[1], hw = vs[2] * vs[3];
    auto vv = v.data();
    auto m = mix.data();
    std::vector<double> out(c * hw, 0.0);
    for (std::size_t ch = 0; ch < c; ++ch) {
        for (std::size_t i = 0; i < t; ++i) {
            const double wgt = m[ch * t + i];
            const double* src = vv.data() + (ch * t + i) * hw;
            for (std::size_t p = 0; p < hw; ++p) out[ch * hw + p] += wgt * src[p];
        }
    }
    return tensor::make_result("temporal_mix", {c, vs[2], vs[3]}, std::move(out), {v, mix}, [c, t, hw](Node& self) {
        const auto& g = self.grad;
        const double* vv = self.inputs[0]->value.data();
        const double* m = self.inputs[1]->value.data();
        double* gv = input_grad(self, 0);
        double* gm = input_grad(self, 1);
        for (std::size_t ch = 0; ch < c; ++ch) {
            for (std::size_t i = 0; i < t; ++i) {
                const std::size_t base = (ch * t + i) * hw;
                double acc = 0.0;
                for (std::size_t p = 0; p < hw; ++p) {
                    if (gv) gv[base + p] += m[ch * t + i] * g[ch * hw + p];
                    acc += vv[base + p] * g[ch * hw + p];
                }
                if (gm) gm[ch * t + i] += acc;
            }
        }
    });
}

Tensor to_thwc(const Tensor& t)
{
    const Shape& s = t.shape();
    if (s.size() != 4) throw ShapeError("to_thwc: expected [C, T, H, W], got " + shape_str(s));
    const std::size_t c = s[0], frames = s[1], h = s[2], w = s[3];
    auto src = t.data();
    std::vector<double> out(t.numel());
    for (std::size_t ch = 0; ch < c; ++ch) {
        for (std::size_t i = 0; i < frames; ++i) {
            for (std::size_t p = 0; p < h * w; ++p) out[(i * h * w + p) * c + ch] = src[(ch * frames + i) * h * w + p];
        }
    }
    return Tensor::from({frames, h, w, c}, std::move(out));
}

} // namespace insitu::sr
