#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "insitu/tensor/layers.hpp"

namespace insitu::graph {

using tensor::Shape;
using tensor::Tensor;

enum class OpKind {
    input,
    constant,
    reshape,
    conv,
    batch_norm,
    relu,
    concat,
    slice,
    fusion,
    temporal_mix,
    bicubic,
    pixel_shuffle,
    add,
    max_pool2,
    upsample,
};

std::string_view op_name(OpKind op);

struct ConvParams {
    std::size_t out_c = 0, in_c = 0;
    std::size_t kt = 1, kh = 1, kw = 1;
    std::size_t st = 1, sh = 1, sw = 1;
    std::size_t pt = 0, ph = 0, pw = 0;
    bool volumetric = false;            // [C, T, H, W] input instead of [C, H, W]
    std::vector<double> weight, bias;   // [out, in, kt, kh, kw], [out]
    std::vector<std::uint8_t> mask;     // 1 = kept; empty until pruned
};

struct BatchNormParams {
    std::vector<double> gamma, beta, mean, var;
    double epsilon = 1e-5;
};

struct Node {
    OpKind op = OpKind::input;
    std::string name;
    std::vector<std::size_t> inputs; // ids of earlier nodes
    Shape shape;                     // output shape

    ConvParams conv;
    BatchNormParams bn;
    std::size_t axis = 0, begin = 0, end = 0; // concat / slice
    std::size_t factor = 1;                   // bicubic, pixel_shuffle, upsample
    std::size_t ref = 0;                      // fusion reference slice
    bool channel_dot = false;
    std::vector<double> values; // constant data, or the [C, T] mix
};

/// Inference-only op list. Every node reads only earlier nodes, so the
/// graph is a DAG by construction; shapes are checked as nodes are added.
class InferenceGraph {
public:
    std::size_t add_input(const Shape& shape, std::string name = "input");
    std::size_t add_constant(const Tensor& value, std::string name);
    std::size_t add_reshape(std::size_t x, const Shape& shape);
    std::size_t add_conv(std::size_t x, const tensor::Conv3dLayer& layer, std::string name);
    std::size_t add_conv(std::size_t x, const tensor::Conv2dLayer& layer, std::string name);
    std::size_t add_batch_norm(std::size_t x, const tensor::BatchNormLayer& layer, std::string name);
    std::size_t add_relu(std::size_t x);
    std::size_t add_concat(const std::vector<std::size_t>& xs, std::size_t axis);
    std::size_t add_slice(std::size_t x, std::size_t axis, std::size_t begin, std::size_t end);
    /// q [C, 1, H, W], k [C, K, H, W], v [C, K+1, H, W] -> [C, H, W].
    std::size_t add_fusion(std::size_t q, std::size_t k, std::size_t v, std::size_t ref, bool channel_dot);
    std::size_t add_temporal_mix(std::size_t v, const Tensor& mix);
    std::size_t add_bicubic(std::size_t x, std::size_t r);
    std::size_t add_pixel_shuffle(std::size_t x, std::size_t r);
    std::size_t add_add(std::size_t a, std::size_t b);
    std::size_t add_max_pool2(std::size_t x);
    std::size_t add_upsample(std::size_t x, std::size_t factor);

    /// Defaults to the last node added.
    void set_output(std::size_t id);
    std::size_t output() const;

    const std::vector<Node>& nodes() const { return nodes_; }
    std::vector<Node>& mutable_nodes() { return nodes_; }
    const Node& node(std::size_t id) const { return nodes_.at(id); }
    std::size_t size() const { return nodes_.size(); }
    std::size_t count(OpKind op) const;
    const Shape& input_shape() const;
    const Shape& output_shape() const { return nodes_.at(output()).shape; }

    /// Number of consumers of each node (the output counts as one).
    std::vector<std::size_t> use_counts() const;

    /// Drops the listed nodes, rewiring every use of a dropped node to
    /// `replacement[i]`. Ids are renumbered.
    void remove(const std::vector<std::size_t>& dropped, const std::vector<std::size_t>& replacement);

private:
    std::size_t push(Node n);
    const Node& at(std::size_t id) const;

    std::vector<Node> nodes_;
    std::size_t output_ = static_cast<std::size_t>(-1);
};

/// Runs a graph with parameters converted to T. Buffers are reused across
/// calls.
template <class T>
class Executor {
public:
    explicit Executor(const InferenceGraph& graph);

    std::span<const T> run(std::span<const T> input);
    Tensor run(const Tensor& input);

    const InferenceGraph& graph() const { return graph_; }

private:
    struct Prepared {
        std::vector<T> weight, bias, scale, shift, values;
    };

    const InferenceGraph& graph_;
    std::vector<Prepared> prepared_;
    std::vector<std::vector<T>> buffers_;
};

extern template class Executor<double>;
extern template class Executor<float>;

/// max |a - b| / max |b|.
double relative_deviation(std::span<const double> a, std::span<const double> b);

} // namespace insitu::graph
