#include "insitu/tensor/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_set>

namespace insitu::tensor {

namespace {
thread_local bool g_grad_enabled = true;
}

std::size_t shape_numel(const Shape& shape)
{
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_str(const Shape& shape)
{
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ',';
        os << shape[i];
    }
    os << ']';
    return os.str();
}

std::vector<double>& detail::Node::grad_buffer()
{
    if (grad.empty()) grad.assign(value.size(), 0.0);
    return grad;
}

static std::shared_ptr<detail::Node> new_leaf(Shape shape, std::vector<double> values, bool requires_grad)
{
    if (shape_numel(shape) != values.size()) {
        throw ShapeError("shape " + shape_str(shape) + " does not hold " + std::to_string(values.size()) + " values");
    }
    auto node = std::make_shared<detail::Node>();
    node->shape = std::move(shape);
    node->value = std::move(values);
    node->requires_grad = requires_grad;
    return node;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad)
{
    return full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad)
{
    std::vector<double> v(shape_numel(shape), value);
    return Tensor(new_leaf(std::move(shape), std::move(v), requires_grad));
}

Tensor Tensor::from(Shape shape, std::vector<double> values, bool requires_grad)
{
    return Tensor(new_leaf(std::move(shape), std::move(values), requires_grad));
}

Tensor Tensor::scalar(double value, bool requires_grad)
{
    return from({1}, {value}, requires_grad);
}

const Shape& Tensor::shape() const
{
    if (!node_) throw ShapeError("use of an undefined tensor");
    return node_->shape;
}

std::size_t Tensor::dim(std::size_t axis) const
{
    const auto& s = shape();
    if (axis >= s.size()) throw ShapeError("axis " + std::to_string(axis) + " out of range for " + shape_str(s));
    return s[axis];
}

std::size_t Tensor::numel() const { return shape_numel(shape()); }

std::span<const double> Tensor::data() const
{
    shape();
    return node_->value;
}

std::span<double> Tensor::mutable_data()
{
    shape();
    return node_->value;
}

double Tensor::item() const
{
    if (numel() != 1) throw ShapeError("item() on tensor of shape " + shape_str(shape()));
    return node_->value[0];
}

double Tensor::at(std::initializer_list<std::size_t> index) const
{
    const auto& s = shape();
    if (index.size() != s.size()) throw ShapeError("index rank does not match " + shape_str(s));
    std::size_t flat = 0;
    std::size_t axis = 0;
    for (auto i : index) {
        if (i >= s[axis]) throw ShapeError("index out of range for " + shape_str(s));
        flat = flat * s[axis] + i;
        ++axis;
    }
    return node_->value[flat];
}

bool Tensor::requires_grad() const { return node_ && node_->requires_grad; }

void Tensor::set_requires_grad(bool on)
{
    shape();
    node_->requires_grad = on;
}

std::span<const double> Tensor::grad() const
{
    shape();
    return node_->grad_buffer();
}

std::span<double> Tensor::mutable_grad()
{
    shape();
    return node_->grad_buffer();
}

void Tensor::zero_grad()
{
    if (node_) node_->grad.clear();
}

void Tensor::backward() const
{
    if (numel() != 1) {
        throw ShapeError("backward() without a seed needs a scalar, got " + shape_str(shape()));
    }
    const double one = 1.0;
    backward(std::span<const double>(&one, 1));
}

void Tensor::backward(std::span<const double> seed) const
{
    if (seed.size() != numel()) throw ShapeError("backward seed size does not match " + shape_str(shape()));
    if (!node_->requires_grad) throw UsageError("backward() on a tensor that does not require grad");

    // Iterative post-order DFS gives a topological order of the subgraph.
    std::vector<detail::Node*> order;
    std::unordered_set<detail::Node*> seen;
    std::vector<std::pair<detail::Node*, std::size_t>> stack{{node_.get(), 0}};
    seen.insert(node_.get());
    while (!stack.empty()) {
        auto& [n, next] = stack.back();
        if (next < n->inputs.size()) {
            detail::Node* child = n->inputs[next++].get();
            if (child->requires_grad && seen.insert(child).second) stack.emplace_back(child, 0);
        } else {
            order.push_back(n);
            stack.pop_back();
        }
    }

    auto& g = node_->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += seed[i];

    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        detail::Node* n = *it;
        if (n->backward && !n->grad.empty()) n->backward(*n);
    }
}

Tensor Tensor::detach() const
{
    return from(shape(), node_->value, false);
}

Tensor Tensor::clone() const
{
    return from(shape(), node_->value, requires_grad());
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

Tensor make_result(const char* op, Shape shape, std::vector<double> value,
                   std::vector<Tensor> inputs, detail::BackwardFn backward)
{
    for (double v : value) {
        if (!std::isfinite(v)) throw NumericError(std::string("non-finite value produced by ") + op);
    }
    auto node = new_leaf(std::move(shape), std::move(value), false);
    node->op = op;
    if (g_grad_enabled) {
        bool any = std::any_of(inputs.begin(), inputs.end(), [](const Tensor& t) { return t.requires_grad(); });
        if (any) {
            node->requires_grad = true;
            node->backward = std::move(backward);
            node->inputs.reserve(inputs.size());
            for (auto& t : inputs) node->inputs.push_back(t.node());
        }
    }
    return Tensor(std::move(node));
}

void expect_shape(const Tensor& t, const Shape& expected, const char* what)
{
    if (t.shape() != expected) {
        throw ShapeError(std::string(what) + ": expected shape " + shape_str(expected) + ", got " + shape_str(t.shape()));
    }
}

} // namespace insitu::tensor
