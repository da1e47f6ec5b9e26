#include "insitu/tensor/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "insitu/tensor/kernels.hpp"

namespace insitu::tensor {

namespace {

using detail::Node;

// Gradient buffer of input `i`, or null when that input takes no gradient.
double* input_grad(Node& self, std::size_t i)
{
    auto& in = *self.inputs[i];
    return in.requires_grad ? in.grad_buffer().data() : nullptr;
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op)
{
    if (a.shape() != b.shape()) {
        throw ShapeError(std::string(op) + ": shapes " + shape_str(a.shape()) + " and " + shape_str(b.shape()) +
                         " differ");
    }
}

struct AxisSplit {
    std::size_t outer = 1, axis = 1, inner = 1;
};

AxisSplit split_at(const Shape& s, std::size_t axis, const char* op)
{
    if (axis >= s.size()) {
        throw ShapeError(std::string(op) + ": axis " + std::to_string(axis) + " out of range for " + shape_str(s));
    }
    AxisSplit r;
    for (std::size_t i = 0; i < axis; ++i) r.outer *= s[i];
    r.axis = s[axis];
    for (std::size_t i = axis + 1; i < s.size(); ++i) r.inner *= s[i];
    return r;
}

} // namespace

Tensor add(const Tensor& a, const Tensor& b)
{
    require_same_shape(a, b, "add");
    std::vector<double> out(a.numel());
    auto x = a.data(), y = b.data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] + y[i];
    return make_result("add", a.shape(), std::move(out), {a, b}, [](Node& self) {
        for (std::size_t k = 0; k < 2; ++k) {
            if (double* g = input_grad(self, k)) {
                for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
            }
        }
    });
}

Tensor sub(const Tensor& a, const Tensor& b)
{
    require_same_shape(a, b, "sub");
    std::vector<double> out(a.numel());
    auto x = a.data(), y = b.data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] - y[i];
    return make_result("sub", a.shape(), std::move(out), {a, b}, [](Node& self) {
        if (double* g = input_grad(self, 0)) {
            for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
        }
        if (double* g = input_grad(self, 1)) {
            for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] -= self.grad[i];
        }
    });
}

Tensor mul(const Tensor& a, const Tensor& b)
{
    require_same_shape(a, b, "mul");
    std::vector<double> out(a.numel());
    auto x = a.data(), y = b.data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] * y[i];
    return make_result("mul", a.shape(), std::move(out), {a, b}, [](Node& self) {
        const auto& x = self.inputs[0]->value;
        const auto& y = self.inputs[1]->value;
        if (double* g = input_grad(self, 0)) {
            for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i] * y[i];
        }
        if (double* g = input_grad(self, 1)) {
            for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i] * x[i];
        }
    });
}

Tensor scale(const Tensor& a, double factor)
{
    std::vector<double> out(a.data().begin(), a.data().end());
    for (auto& v : out) v *= factor;
    return make_result("scale", a.shape(), std::move(out), {a}, [factor](Node& self) {
        if (double* g = input_grad(self, 0)) {
            for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += factor * self.grad[i];
        }
    });
}

Tensor square(const Tensor& a)
{
    std::vector<double> out(a.data().begin(), a.data().end());
    for (auto& v : out) v *= v;
    return make_result("square", a.shape(), std::move(out), {a}, [](Node& self) {
        const auto& x = self.inputs[0]->value;
        if (double* g = input_grad(self, 0)) {
            for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += 2.0 * x[i] * self.grad[i];
        }
    });
}

Tensor relu(const Tensor& a)
{
    std::vector<double> out(a.data().begin(), a.data().end());
    for (auto& v : out) v = v > 0.0 ? v : 0.0;
    return make_result("relu", a.shape(), std::move(out), {a}, [](Node& self) {
        const auto& x = self.inputs[0]->value;
        if (double* g = input_grad(self, 0)) {
            for (std::size_t i = 0; i < self.grad.size(); ++i) {
                if (x[i] > 0.0) g[i] += self.grad[i];
            }
        }
    });
}

Tensor sum(const Tensor& a)
{
    double s = 0.0;
    for (double v : a.data()) s += v;
    return make_result("sum", {1}, {s}, {a}, [](Node& self) {
        if (double* g = input_grad(self, 0)) {
            const double up = self.grad[0];
            for (std::size_t i = 0; i < self.inputs[0]->value.size(); ++i) g[i] += up;
        }
    });
}

Tensor mean(const Tensor& a)
{
    return scale(sum(a), 1.0 / static_cast<double>(a.numel()));
}

Tensor mse_loss(const Tensor& prediction, const Tensor& target)
{
    require_same_shape(prediction, target, "mse_loss");
    const auto p = prediction.data(), t = target.data();
    const double n = static_cast<double>(p.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double d = p[i] - t[i];
        acc += d * d;
    }
    return make_result("mse_loss", {1}, {acc / n}, {prediction, target}, [n](Node& self) {
        const auto& p = self.inputs[0]->value;
        const auto& t = self.inputs[1]->value;
        const double up = self.grad[0] * 2.0 / n;
        if (double* g = input_grad(self, 0)) {
            for (std::size_t i = 0; i < p.size(); ++i) g[i] += up * (p[i] - t[i]);
        }
        if (double* g = input_grad(self, 1)) {
            for (std::size_t i = 0; i < p.size(); ++i) g[i] -= up * (p[i] - t[i]);
        }
    });
}

Tensor reshape(const Tensor& a, Shape shape)
{
    if (shape_numel(shape) != a.numel()) {
        throw ShapeError("reshape: cannot view " + shape_str(a.shape()) + " as " + shape_str(shape));
    }
    std::vector<double> out(a.data().begin(), a.data().end());
    return make_result("reshape", std::move(shape), std::move(out), {a}, [](Node& self) {
        if (double* g = input_grad(self, 0)) {
            for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
        }
    });
}

Tensor slice(const Tensor& a, std::size_t axis, std::size_t begin, std::size_t end)
{
    const auto sp = split_at(a.shape(), axis, "slice");
    if (begin >= end || end > sp.axis) {
        throw ShapeError("slice: range [" + std::to_string(begin) + "," + std::to_string(end) + ") invalid for axis " +
                         std::to_string(axis) + " of " + shape_str(a.shape()));
    }
    const std::size_t len = end - begin;
    Shape shape = a.shape();
    shape[axis] = len;
    std::vector<double> out(sp.outer * len * sp.inner);
    auto x = a.data();
    for (std::size_t o = 0; o < sp.outer; ++o) {
        std::copy_n(x.begin() + static_cast<long>((o * sp.axis + begin) * sp.inner), len * sp.inner,
                    out.begin() + static_cast<long>(o * len * sp.inner));
    }
    return make_result("slice", std::move(shape), std::move(out), {a}, [sp, begin, len](Node& self) {
        if (double* g = input_grad(self, 0)) {
            for (std::size_t o = 0; o < sp.outer; ++o) {
                const double* src = self.grad.data() + o * len * sp.inner;
                double* dst = g + (o * sp.axis + begin) * sp.inner;
                for (std::size_t i = 0; i < len * sp.inner; ++i) dst[i] += src[i];
            }
        }
    });
}

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis)
{
    if (parts.empty()) throw ShapeError("concat: no inputs");
    const Shape& first = parts.front().shape();
    if (axis >= first.size()) {
        throw ShapeError("concat: axis " + std::to_string(axis) + " out of range for " + shape_str(first));
    }
    Shape shape = first;
    shape[axis] = 0;
    std::vector<std::size_t> widths;
    for (const auto& p : parts) {
        const Shape& s = p.shape();
        bool ok = s.size() == first.size();
        for (std::size_t i = 0; ok && i < s.size(); ++i) ok = (i == axis) || s[i] == first[i];
        if (!ok) throw ShapeError("concat: shape " + shape_str(s) + " disagrees with " + shape_str(first));
        widths.push_back(s[axis]);
        shape[axis] += s[axis];
    }
    const auto sp = split_at(shape, axis, "concat");
    std::vector<double> out(shape_numel(shape));
    std::size_t offset = 0;
    for (std::size_t k = 0; k < parts.size(); ++k) {
        auto x = parts[k].data();
        const std::size_t chunk = widths[k] * sp.inner;
        for (std::size_t o = 0; o < sp.outer; ++o) {
            std::copy_n(x.begin() + static_cast<long>(o * chunk), chunk,
                        out.begin() + static_cast<long>((o * sp.axis + offset) * sp.inner));
        }
        offset += widths[k];
    }
    return make_result("concat", std::move(shape), std::move(out), parts, [sp, widths](Node& self) {
        std::size_t offset = 0;
        for (std::size_t k = 0; k < widths.size(); ++k) {
            const std::size_t chunk = widths[k] * sp.inner;
            if (double* g = input_grad(self, k)) {
                for (std::size_t o = 0; o < sp.outer; ++o) {
                    const double* src = self.grad.data() + (o * sp.axis + offset) * sp.inner;
                    double* dst = g + o * chunk;
                    for (std::size_t i = 0; i < chunk; ++i) dst[i] += src[i];
                }
            }
            offset += widths[k];
        }
    });
}

Tensor pad(const Tensor& a, const PadSpec& spec, double value)
{
    const Shape& in = a.shape();
    if (spec.size() > in.size()) {
        throw ShapeError("pad: spec has " + std::to_string(spec.size()) + " axes, tensor " + shape_str(in));
    }
    const std::size_t lead = in.size() - spec.size();
    Shape out_shape = in;
    std::vector<std::size_t> before(in.size(), 0);
    for (std::size_t i = 0; i < spec.size(); ++i) {
        before[lead + i] = spec[i].first;
        out_shape[lead + i] += spec[i].first + spec[i].second;
    }
    // Row-major strides of the output; map every input element to its slot.
    std::vector<std::size_t> ostride(in.size(), 1);
    for (std::size_t i = in.size(); i-- > 1;) ostride[i - 1] = ostride[i] * out_shape[i];
    std::vector<std::size_t> dest(a.numel());
    std::vector<std::size_t> idx(in.size(), 0);
    for (std::size_t flat = 0; flat < dest.size(); ++flat) {
        std::size_t o = 0;
        for (std::size_t d = 0; d < in.size(); ++d) o += (idx[d] + before[d]) * ostride[d];
        dest[flat] = o;
        for (std::size_t d = in.size(); d-- > 0;) {
            if (++idx[d] < in[d]) break;
            idx[d] = 0;
        }
    }
    std::vector<double> out(shape_numel(out_shape), value);
    auto x = a.data();
    for (std::size_t i = 0; i < dest.size(); ++i) out[dest[i]] = x[i];
    return make_result("pad", std::move(out_shape), std::move(out), {a}, [dest = std::move(dest)](Node& self) {
        if (double* g = input_grad(self, 0)) {
            for (std::size_t i = 0; i < dest.size(); ++i) g[i] += self.grad[dest[i]];
        }
    });
}

Tensor softmax(const Tensor& scores, std::size_t axis)
{
    const auto sp = split_at(scores.shape(), axis, "softmax");
    auto x = scores.data();
    std::vector<double> out(x.size());
    for (std::size_t o = 0; o < sp.outer; ++o) {
        for (std::size_t i = 0; i < sp.inner; ++i) {
            const std::size_t base = o * sp.axis * sp.inner + i;
            double mx = -std::numeric_limits<double>::infinity();
            for (std::size_t k = 0; k < sp.axis; ++k) mx = std::max(mx, x[base + k * sp.inner]);
            double z = 0.0;
            for (std::size_t k = 0; k < sp.axis; ++k) {
                const double e = std::exp(x[base + k * sp.inner] - mx);
                out[base + k * sp.inner] = e;
                z += e;
            }
            for (std::size_t k = 0; k < sp.axis; ++k) out[base + k * sp.inner] /= z;
        }
    }
    return make_result("softmax", scores.shape(), std::move(out), {scores}, [sp](Node& self) {
        double* g = input_grad(self, 0);
        if (!g) return;
        // Recompute from the stored output: dx = y * (dy - sum(dy * y)).
        const auto& dy = self.grad;
        const auto& y = self.value;
        for (std::size_t o = 0; o < sp.outer; ++o) {
            for (std::size_t i = 0; i < sp.inner; ++i) {
                const std::size_t base = o * sp.axis * sp.inner + i;
                double dot = 0.0;
                for (std::size_t k = 0; k < sp.axis; ++k) dot += dy[base + k * sp.inner] * y[base + k * sp.inner];
                for (std::size_t k = 0; k < sp.axis; ++k) {
                    const std::size_t j = base + k * sp.inner;
                    g[j] += y[j] * (dy[j] - dot);
                }
            }
        }
    });
}

Tensor pixel_shuffle(const Tensor& a, std::size_t r)
{
    const Shape& s = a.shape();
    if (s.size() != 3) throw ShapeError("pixel_shuffle: expected [C*r*r, H, W], got " + shape_str(s));
    if (r == 0 || s[0] % (r * r) != 0) {
        throw ShapeError("pixel_shuffle: " + std::to_string(s[0]) + " channels not divisible by r^2 = " +
                         std::to_string(r * r));
    }
    const std::size_t c = s[0] / (r * r), h = s[1], w = s[2];
    std::vector<double> out(a.numel());
    kernels::pixel_shuffle(a.data().data(), c, h, w, r, out.data());
    return make_result("pixel_shuffle", {c, h * r, w * r}, std::move(out), {a}, [c, h, w, r](Node& self) {
        if (double* g = input_grad(self, 0)) {
            std::vector<double> back(self.grad.size());
            kernels::pixel_unshuffle(self.grad.data(), c, h, w, r, back.data());
            for (std::size_t i = 0; i < back.size(); ++i) g[i] += back[i];
        }
    });
}

Tensor pixel_unshuffle(const Tensor& a, std::size_t r)
{
    const Shape& s = a.shape();
    if (s.size() != 3) throw ShapeError("pixel_unshuffle: expected [C, r*H, r*W], got " + shape_str(s));
    if (r == 0 || s[1] % r != 0 || s[2] % r != 0) {
        throw ShapeError("pixel_unshuffle: spatial dims of " + shape_str(s) + " not divisible by " + std::to_string(r));
    }
    const std::size_t c = s[0], h = s[1] / r, w = s[2] / r;
    std::vector<double> out(a.numel());
    kernels::pixel_unshuffle(a.data().data(), c, h, w, r, out.data());
    return make_result("pixel_unshuffle", {c * r * r, h, w}, std::move(out), {a}, [c, h, w, r](Node& self) {
        if (double* g = input_grad(self, 0)) {
            std::vector<double> back(self.grad.size());
            kernels::pixel_shuffle(self.grad.data(), c, h, w, r, back.data());
            for (std::size_t i = 0; i < back.size(); ++i) g[i] += back[i];
        }
    });
}

Tensor max_pool2(const Tensor& a)
{
    const Shape& s = a.shape();
    if (s.size() != 3 || s[1] % 2 != 0 || s[2] % 2 != 0) {
        throw ShapeError("max_pool2: expected [C, H, W] with even H, W, got " + shape_str(s));
    }
    const std::size_t n = s[0] * (s[1] / 2) * (s[2] / 2);
    std::vector<double> out(n);
    std::vector<std::size_t> argmax(n);
    kernels::max_pool2(a.data().data(), s[0], s[1], s[2], out.data(), argmax.data());
    return make_result("max_pool2", {s[0], s[1] / 2, s[2] / 2}, std::move(out), {a},
                       [argmax = std::move(argmax)](Node& self) {
                           if (double* g = input_grad(self, 0)) {
                               for (std::size_t i = 0; i < argmax.size(); ++i) g[argmax[i]] += self.grad[i];
                           }
                       });
}

Tensor upsample_nearest(const Tensor& a, std::size_t factor)
{
    const Shape& s = a.shape();
    if (s.size() != 3 || factor == 0) throw ShapeError("upsample_nearest: expected [C, H, W], got " + shape_str(s));
    const std::size_t c = s[0], h = s[1], w = s[2];
    std::vector<double> out(c * h * w * factor * factor);
    kernels::upsample_nearest(a.data().data(), c, h, w, factor, out.data());
    return make_result("upsample_nearest", {c, h * factor, w * factor}, std::move(out), {a},
                       [c, h, w, factor](Node& self) {
                           double* g = input_grad(self, 0);
                           if (!g) return;
                           const std::size_t oh = h * factor, ow = w * factor;
                           for (std::size_t ch = 0; ch < c; ++ch) {
                               for (std::size_t y = 0; y < oh; ++y) {
                                   for (std::size_t x = 0; x < ow; ++x) {
                                       g[(ch * h + y / factor) * w + x / factor] += self.grad[(ch * oh + y) * ow + x];
                                   }
                               }
                           }
                       });
}

Tensor cross_entropy(const Tensor& logits, std::span<const std::uint8_t> labels)
{
    const Shape& s = logits.shape();
    if (s.size() != 3) throw ShapeError("cross_entropy: expected logits [K, H, W], got " + shape_str(s));
    const std::size_t k = s[0], plane = s[1] * s[2];
    if (labels.size() != plane) {
        throw ShapeError("cross_entropy: " + std::to_string(labels.size()) + " labels for logits " + shape_str(s));
    }
    auto x = logits.data();
    std::vector<double> prob(x.size());
    double loss = 0.0;
    for (std::size_t p = 0; p < plane; ++p) {
        if (labels[p] >= k) throw DataError("cross_entropy: label " + std::to_string(labels[p]) + " out of range");
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < k; ++c) mx = std::max(mx, x[c * plane + p]);
        double z = 0.0;
        for (std::size_t c = 0; c < k; ++c) {
            prob[c * plane + p] = std::exp(x[c * plane + p] - mx);
            z += prob[c * plane + p];
        }
        for (std::size_t c = 0; c < k; ++c) prob[c * plane + p] /= z;
        loss += -(x[labels[p] * plane + p] - mx - std::log(z));
    }
    loss /= static_cast<double>(plane);
    std::vector<std::uint8_t> lab(labels.begin(), labels.end());
    return make_result("cross_entropy", {1}, {loss}, {logits},
                       [prob = std::move(prob), lab = std::move(lab), k, plane](Node& self) {
                           double* g = input_grad(self, 0);
                           if (!g) return;
                           const double up = self.grad[0] / static_cast<double>(plane);
                           for (std::size_t c = 0; c < k; ++c) {
                               for (std::size_t p = 0; p < plane; ++p) {
                                   const double onehot = lab[p] == c ? 1.0 : 0.0;
                                   g[c * plane + p] += up * (prob[c * plane + p] - onehot);
                               }
                           }
                       });
}

} // namespace insitu::tensor
