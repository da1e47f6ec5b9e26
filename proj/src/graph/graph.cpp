#include "insitu/graph/graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "insitu/errors.hpp"
#include "insitu/tensor/kernels.hpp"

namespace insitu::graph {

using tensor::shape_str;

namespace {

std::size_t product(const Shape& s, std::size_t from = 0, std::size_t to = std::size_t(-1))
{
    to = std::min(to, s.size());
    std::size_t n = 1;
    for (std::size_t i = from; i < to; ++i) n *= s[i];
    return n;
}

kernels::ConvGeometry geometry(const ConvParams& c, const Shape& in)
{
    kernels::ConvGeometry g;
    g.in_c = in[0];
    g.in_t = c.volumetric ? in[1] : 1;
    g.in_h = in[in.size() - 2];
    g.in_w = in[in.size() - 1];
    g.out_c = c.out_c;
    g.kt = c.kt, g.kh = c.kh, g.kw = c.kw;
    g.st = c.st, g.sh = c.sh, g.sw = c.sw;
    g.pt = c.pt, g.ph = c.ph, g.pw = c.pw;
    return g;
}

std::vector<double> copy_values(const Tensor& t)
{
    return {t.data().begin(), t.data().end()};
}

} // namespace

std::string_view op_name(OpKind op)
{
    switch (op) {
    case OpKind::input: return "input";
    case OpKind::constant: return "constant";
    case OpKind::reshape: return "reshape";
    case OpKind::conv: return "conv";
    case OpKind::batch_norm: return "batch_norm";
    case OpKind::relu: return "relu";
    case OpKind::concat: return "concat";
    case OpKind::slice: return "slice";
    case OpKind::fusion: return "fusion";
    case OpKind::temporal_mix: return "temporal_mix";
    case OpKind::bicubic: return "bicubic";
    case OpKind::pixel_shuffle: return "pixel_shuffle";
    case OpKind::add: return "add";
    case OpKind::max_pool2: return "max_pool2";
    case OpKind::upsample: return "upsample";
    }
    return "?";
}

const Node& InferenceGraph::at(std::size_t id) const
{
    if (id >= nodes_.size()) throw UsageError("graph: node " + std::to_string(id) + " does not exist");
    return nodes_[id];
}

std::size_t InferenceGraph::push(Node n)
{
    nodes_.push_back(std::move(n));
    return nodes_.size() - 1;
}

std::size_t InferenceGraph::add_input(const Shape& shape, std::string name)
{
    if (count(OpKind::input) != 0) throw UsageError("graph: only one input node is supported");
    Node n;
    n.op = OpKind::input;
    n.name = std::move(name);
    n.shape = shape;
    return push(std::move(n));
}

std::size_t InferenceGraph::add_constant(const Tensor& value, std::string name)
{
    Node n;
    n.op = OpKind::constant;
    n.name = std::move(name);
    n.shape = value.shape();
    n.values = copy_values(value);
    return push(std::move(n));
}

std::size_t InferenceGraph::add_reshape(std::size_t x, const Shape& shape)
{
    if (product(shape) != product(at(x).shape)) {
        throw ShapeError("graph reshape: " + shape_str(at(x).shape) + " -> " + shape_str(shape));
    }
    Node n;
    n.op = OpKind::reshape;
    n.inputs = {x};
    n.shape = shape;
    return push(std::move(n));
}

std::size_t InferenceGraph::add_conv(std::size_t x, const tensor::Conv3dLayer& layer, std::string name)
{
    const Shape& in = at(x).shape;
    Node n;
    n.op = OpKind::conv;
    n.name = std::move(name);
    n.inputs = {x};
    auto& c = n.conv;
    c.volumetric = true;
    c.out_c = layer.out_channels();
    c.in_c = layer.in_channels();
    c.kt = layer.kernel_t();
    c.kh = c.kw = layer.kernel_s();
    c.st = layer.stride_t;
    c.sh = c.sw = layer.stride_s;
    c.pt = layer.pad_t;
    c.ph = c.pw = layer.pad_s;
    c.weight = copy_values(layer.weight);
    c.bias = copy_values(layer.bias);
    if (in.size() != 4 || in[0] != c.in_c || !geometry(c, in).valid()) {
        throw ShapeError("graph conv " + n.name + ": input " + shape_str(in) + " does not fit weights " +
                         shape_str(layer.weight.shape()));
    }
    const auto g = geometry(c, in);
    n.shape = {g.out_c, g.out_t(), g.out_h(), g.out_w()};
    return push(std::move(n));
}

std::size_t InferenceGraph::add_conv(std::size_t x, const tensor::Conv2dLayer& layer, std::string name)
{
    const Shape& in = at(x).shape;
    Node n;
    n.op = OpKind::conv;
    n.name = std::move(name);
    n.inputs = {x};
    auto& c = n.conv;
    c.out_c = layer.out_channels();
    c.in_c = layer.in_channels();
    c.kh = layer.weight.dim(2);
    c.kw = layer.weight.dim(3);
    c.sh = c.sw = layer.stride;
    c.ph = c.pw = layer.padding;
    c.weight = copy_values(layer.weight);
    c.bias = copy_values(layer.bias);
    if (in.size() != 3 || in[0] != c.in_c || !geometry(c, in).valid()) {
        throw ShapeError("graph conv " + n.name + ": input " + shape_str(in) + " does not fit weights " +
                         shape_str(layer.weight.shape()));
    }
    const auto g = geometry(c, in);
    n.shape = {g.out_c, g.out_h(), g.out_w()};
    return push(std::move(n));
}

std::size_t InferenceGraph::add_batch_norm(std::size_t x, const tensor::BatchNormLayer& layer, std::string name)
{
    const Shape& in = at(x).shape;
    if (in.empty() || in[0] != layer.channels()) {
        throw ShapeError("graph batch_norm " + name + ": " + std::to_string(layer.channels()) +
                         " channels, input " + shape_str(in));
    }
    Node n;
    n.op = OpKind::batch_norm;
    n.name = std::move(name);
    n.inputs = {x};
    n.shape = in;
    n.bn = {copy_values(layer.gamma), copy_values(layer.beta), copy_values(layer.running_mean),
            copy_values(layer.running_var), layer.epsilon};
    return push(std::move(n));
}

std::size_t InferenceGraph::add_relu(std::size_t x)
{
    Node n;
    n.op = OpKind::relu;
    n.inputs = {x};
    n.shape = at(x).shape;
    return push(std::move(n));
}

std::size_t InferenceGraph::add_concat(const std::vector<std::size_t>& xs, std::size_t axis)
{
    if (xs.empty()) throw UsageError("graph concat: no inputs");
    Shape out = at(xs.front()).shape;
    if (axis >= out.size()) throw ShapeError("graph concat: axis " + std::to_string(axis) + " of " + shape_str(out));
    out[axis] = 0;
    for (auto id : xs) {
        const Shape& s = at(id).shape;
        bool ok = s.size() == out.size();
        for (std::size_t i = 0; ok && i < s.size(); ++i) ok = i == axis || s[i] == out[i];
        if (!ok) throw ShapeError("graph concat: " + shape_str(s) + " does not match " + shape_str(at(xs.front()).shape));
        out[axis] += s[axis];
    }
    Node n;
    n.op = OpKind::concat;
    n.inputs = xs;
    n.axis = axis;
    n.shape = out;
    return push(std::move(n));
}

std::size_t InferenceGraph::add_slice(std::size_t x, std::size_t axis, std::size_t begin, std::size_t end)
{
    Shape s = at(x).shape;
    if (axis >= s.size() || begin > end || end > s[axis]) {
        throw ShapeError("graph slice: [" + std::to_string(begin) + ", " + std::to_string(end) + ") on axis " +
                         std::to_string(axis) + " of " + shape_str(s));
    }
    s[axis] = end - begin;
    Node n;
    n.op = OpKind::slice;
    n.inputs = {x};
    n.axis = axis;
    n.begin = begin;
    n.end = end;
    n.shape = s;
    return push(std::move(n));
}

std::size_t InferenceGraph::add_fusion(std::size_t q, std::size_t k, std::size_t v, std::size_t ref, bool channel_dot)
{
    const Shape &qs = at(q).shape, &ks = at(k).shape, &vs = at(v).shape;
    const bool ok = qs.size() == 4 && ks.size() == 4 && vs.size() == 4 && qs[1] == 1 && ks[0] == qs[0] &&
                    vs[0] == qs[0] && vs[1] == ks[1] + 1 && ks[2] == qs[2] && vs[2] == qs[2] && ks[3] == qs[3] &&
                    vs[3] == qs[3] && ref < vs[1];
    if (!ok) throw ShapeError("graph fusion: q " + shape_str(qs) + ", k " + shape_str(ks) + ", v " + shape_str(vs));
    Node n;
    n.op = OpKind::fusion;
    n.inputs = {q, k, v};
    n.ref = ref;
    n.channel_dot = channel_dot;
    n.shape = {qs[0], qs[2], qs[3]};
    return push(std::move(n));
}

std::size_t InferenceGraph::add_temporal_mix(std::size_t v, const Tensor& mix)
{
    const Shape& vs = at(v).shape;
    if (vs.size() != 4 || mix.shape() != Shape{vs[0], vs[1]}) {
        throw ShapeError("graph temporal_mix: v " + shape_str(vs) + ", mix " + shape_str(mix.shape()));
    }
    Node n;
    n.op = OpKind::temporal_mix;
    n.name = "mix";
    n.inputs = {v};
    n.values = copy_values(mix);
    n.shape = {vs[0], vs[2], vs[3]};
    return push(std::move(n));
}

std::size_t InferenceGraph::add_bicubic(std::size_t x, std::size_t r)
{
    const Shape& s = at(x).shape;
    if (s.size() != 3 || r == 0) throw ShapeError("graph bicubic: input " + shape_str(s));
    Node n;
    n.op = OpKind::bicubic;
    n.inputs = {x};
    n.factor = r;
    n.shape = {s[0], s[1] * r, s[2] * r};
    return push(std::move(n));
}

std::size_t InferenceGraph::add_pixel_shuffle(std::size_t x, std::size_t r)
{
    const Shape& s = at(x).shape;
    if (s.size() != 3 || r == 0 || s[0] % (r * r) != 0) {
        throw ShapeError("graph pixel_shuffle: input " + shape_str(s) + " with r=" + std::to_string(r));
    }
    Node n;
    n.op = OpKind::pixel_shuffle;
    n.inputs = {x};
    n.factor = r;
    n.shape = {s[0] / (r * r), s[1] * r, s[2] * r};
    return push(std::move(n));
}

std::size_t InferenceGraph::add_add(std::size_t a, std::size_t b)
{
    if (at(a).shape != at(b).shape) {
        throw ShapeError("graph add: " + shape_str(at(a).shape) + " vs " + shape_str(at(b).shape));
    }
    Node n;
    n.op = OpKind::add;
    n.inputs = {a, b};
    n.shape = at(a).shape;
    return push(std::move(n));
}

std::size_t InferenceGraph::add_max_pool2(std::size_t x)
{
    const Shape& s = at(x).shape;
    if (s.size() != 3 || s[1] % 2 || s[2] % 2) throw ShapeError("graph max_pool2: input " + shape_str(s));
    Node n;
    n.op = OpKind::max_pool2;
    n.inputs = {x};
    n.shape = {s[0], s[1] / 2, s[2] / 2};
    return push(std::move(n));
}

std::size_t InferenceGraph::add_upsample(std::size_t x, std::size_t factor)
{
    const Shape& s = at(x).shape;
    if (s.size() != 3 || factor == 0) throw ShapeError("graph upsample: input " + shape_str(s));
    Node n;
    n.op = OpKind::upsample;
    n.inputs = {x};
    n.factor = factor;
    n.shape = {s[0], s[1] * factor, s[2] * factor};
    return push(std::move(n));
}

void InferenceGraph::set_output(std::size_t id)
{
    at(id);
    output_ = id;
}

std::size_t InferenceGraph::output() const
{
    if (nodes_.empty()) throw UsageError("graph: empty");
    return output_ < nodes_.size() ? output_ : nodes_.size() - 1;
}

std::size_t InferenceGraph::count(OpKind op) const
{
    return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [op](const Node& n) { return n.op == op; }));
}

const Shape& InferenceGraph::input_shape() const
{
    for (const auto& n : nodes_) {
        if (n.op == OpKind::input) return n.shape;
    }
    throw UsageError("graph: no input node");
}

std::vector<std::size_t> InferenceGraph::use_counts() const
{
    std::vector<std::size_t> uses(nodes_.size(), 0);
    for (const auto& n : nodes_) {
        for (auto i : n.inputs) ++uses[i];
    }
    if (!nodes_.empty()) ++uses[output()];
    return uses;
}

void InferenceGraph::remove(const std::vector<std::size_t>& dropped, const std::vector<std::size_t>& replacement)
{
    if (dropped.size() != replacement.size()) throw UsageError("graph remove: mismatched replacement list");
    std::vector<std::size_t> target(nodes_.size());
    std::iota(target.begin(), target.end(), 0);
    std::vector<bool> gone(nodes_.size(), false);
    for (std::size_t i = 0; i < dropped.size(); ++i) {
        gone.at(dropped[i]) = true;
        target[dropped[i]] = replacement[i];
    }
    // follow chains of replacements, then renumber the survivors
    auto resolve = [&](std::size_t id) {
        while (gone[id]) id = target[id];
        return id;
    };
    std::vector<std::size_t> new_id(nodes_.size(), 0);
    std::vector<Node> kept;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        if (gone[i]) continue;
        new_id[i] = kept.size();
        Node n = std::move(nodes_[i]);
        for (auto& in : n.inputs) in = new_id[resolve(in)];
        kept.push_back(std::move(n));
    }
    const std::size_t out = nodes_.empty() ? 0 : new_id[resolve(output())];
    nodes_ = std::move(kept);
    output_ = out;
}

template <class T>
Executor<T>::Executor(const InferenceGraph& graph) : graph_(graph)
{
    graph_.output();
    auto convert = [](const std::vector<double>& v) { return std::vector<T>(v.begin(), v.end()); };
    prepared_.resize(graph_.size());
    buffers_.resize(graph_.size());
    for (std::size_t i = 0; i < graph_.size(); ++i) {
        const Node& n = graph_.node(i);
        auto& p = prepared_[i];
        if (n.op == OpKind::conv) {
            p.weight = convert(n.conv.weight);
            p.bias = convert(n.conv.bias);
        } else if (n.op == OpKind::batch_norm) {
            const std::size_t c = n.bn.gamma.size();
            p.scale.resize(c);
            p.shift.resize(c);
            for (std::size_t ch = 0; ch < c; ++ch) {
                const double s = n.bn.gamma[ch] / std::sqrt(n.bn.var[ch] + n.bn.epsilon);
                p.scale[ch] = static_cast<T>(s);
                p.shift[ch] = static_cast<T>(n.bn.beta[ch] - n.bn.mean[ch] * s);
            }
        } else if (n.op == OpKind::constant || n.op == OpKind::temporal_mix) {
            p.values = convert(n.values);
        }
        buffers_[i].resize(product(n.shape));
    }
}

template <class T>
std::span<const T> Executor<T>::run(std::span<const T> input)
{
    for (std::size_t id = 0; id < graph_.size(); ++id) {
        const Node& n = graph_.node(id);
        auto& out = buffers_[id];
        const auto& p = prepared_[id];
        auto in = [&](std::size_t i) -> const std::vector<T>& { return buffers_[n.inputs[i]]; };
        auto in_shape = [&](std::size_t i) -> const Shape& { return graph_.node(n.inputs[i]).shape; };

        switch (n.op) {
        case OpKind::input:
            if (input.size() != out.size()) {
                throw ShapeError("graph input: expected " + std::to_string(out.size()) + " values for " +
                                 shape_str(n.shape) + ", got " + std::to_string(input.size()));
            }
            std::copy(input.begin(), input.end(), out.begin());
            break;
        case OpKind::constant: std::copy(p.values.begin(), p.values.end(), out.begin()); break;
        case OpKind::reshape: std::copy(in(0).begin(), in(0).end(), out.begin()); break;
        case OpKind::conv:
            kernels::conv_forward<T>(geometry(n.conv, in_shape(0)), in(0).data(), p.weight.data(), p.bias.data(),
                                     out.data());
            break;
        case OpKind::batch_norm:
            kernels::channel_affine<T>(in(0).data(), n.shape[0], product(n.shape, 1), p.scale.data(), p.shift.data(),
                                       out.data());
            break;
        case OpKind::relu:
            std::transform(in(0).begin(), in(0).end(), out.begin(), [](T v) { return v > T(0) ? v : T(0); });
            break;
        case OpKind::concat: {
            const std::size_t outer = product(n.shape, 0, n.axis), out_block = product(n.shape, n.axis);
            std::size_t offset = 0;
            for (std::size_t i = 0; i < n.inputs.size(); ++i) {
                const std::size_t block = product(in_shape(i), n.axis);
                for (std::size_t o = 0; o < outer; ++o) {
                    std::copy_n(in(i).data() + o * block, block, out.data() + o * out_block + offset);
                }
                offset += block;
            }
            break;
        }
        case OpKind::slice: {
            const Shape& s = in_shape(0);
            const std::size_t outer = product(s, 0, n.axis), inner = product(s, n.axis + 1);
            const std::size_t len = (n.end - n.begin) * inner;
            for (std::size_t o = 0; o < outer; ++o) {
                std::copy_n(in(0).data() + (o * s[n.axis] + n.begin) * inner, len, out.data() + o * len);
            }
            break;
        }
        case OpKind::fusion: {
            const Shape& ks = in_shape(1);
            kernels::temporal_fusion<T>(in(0).data(), in(1).data(), in(2).data(), ks[0], ks[1], n.ref, ks[2] * ks[3],
                                        n.channel_dot, out.data(), nullptr);
            break;
        }
        case OpKind::temporal_mix: {
            const Shape& vs = in_shape(0);
            const std::size_t c = vs[0], t = vs[1], hw = vs[2] * vs[3];
            std::fill(out.begin(), out.end(), T(0));
            for (std::size_t ch = 0; ch < c; ++ch) {
                for (std::size_t i = 0; i < t; ++i) {
                    const T wgt = p.values[ch * t + i];
                    const T* src = in(0).data() + (ch * t + i) * hw;
                    T* dst = out.data() + ch * hw;
                    for (std::size_t q = 0; q < hw; ++q) dst[q] += wgt * src[q];
                }
            }
            break;
        }
        case OpKind::bicubic: {
            const Shape& s = in_shape(0);
            kernels::upscale_bicubic<T>(in(0).data(), s[0], s[1], s[2], n.factor, out.data());
            break;
        }
        case OpKind::pixel_shuffle: {
            const Shape& s = in_shape(0);
            kernels::pixel_shuffle<T>(in(0).data(), n.shape[0], s[1], s[2], n.factor, out.data());
            break;
        }
        case OpKind::add:
            std::transform(in(0).begin(), in(0).end(), in(1).begin(), out.begin(), std::plus<T>());
            break;
        case OpKind::max_pool2: {
            const Shape& s = in_shape(0);
            kernels::max_pool2<T>(in(0).data(), s[0], s[1], s[2], out.data(), nullptr);
            break;
        }
        case OpKind::upsample: {
            const Shape& s = in_shape(0);
            kernels::upsample_nearest<T>(in(0).data(), s[0], s[1], s[2], n.factor, out.data());
            break;
        }
        }
    }
    const auto& result = buffers_[graph_.output()];
    for (T v : result) {
        if (!std::isfinite(v)) throw NumericError("graph: non-finite output value");
    }
    return result;
}

template <class T>
Tensor Executor<T>::run(const Tensor& input)
{
    if (input.shape() != graph_.input_shape()) {
        throw ShapeError("graph: input " + shape_str(input.shape()) + ", expected " + shape_str(graph_.input_shape()));
    }
    std::vector<T> x(input.data().begin(), input.data().end());
    auto y = run(std::span<const T>(x));
    return Tensor::from(graph_.output_shape(), std::vector<double>(y.begin(), y.end()));
}

template class Executor<double>;
template class Executor<float>;

double relative_deviation(std::span<const double> a, std::span<const double> b)
{
    if (a.size() != b.size()) throw ShapeError("relative_deviation: sizes differ");
    double diff = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        diff = std::max(diff, std::abs(a[i] - b[i]));
        scale = std::max(scale, std::abs(b[i]));
    }
    return scale > 0.0 ? diff / scale : diff;
}

} // namespace insitu::graph
