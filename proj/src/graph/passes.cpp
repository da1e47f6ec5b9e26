#include "insitu/graph/passes.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "insitu/errors.hpp"

namespace insitu::graph {

ConvParams fuse_conv_bn(const ConvParams& conv, const BatchNormParams& bn)
{
    if (bn.gamma.size() != conv.out_c) {
        throw ShapeError("fuse_conv_bn: " + std::to_string(conv.out_c) + " conv outputs vs " +
                         std::to_string(bn.gamma.size()) + " BN channels");
    }
    ConvParams out = conv;
    const std::size_t per_out = conv.weight.size() / conv.out_c;
    for (std::size_t c = 0; c < conv.out_c; ++c) {
        const double s = bn.gamma[c] / std::sqrt(bn.var[c] + bn.epsilon);
        for (std::size_t i = 0; i < per_out; ++i) out.weight[c * per_out + i] = conv.weight[c * per_out + i] * s;
        out.bias[c] = bn.beta[c] + (conv.bias[c] - bn.mean[c]) * s;
    }
    return out;
}

FusionReport fuse_conv_bn(InferenceGraph& graph)
{
    FusionReport report;
    const auto uses = graph.use_counts();
    auto& nodes = graph.mutable_nodes();
    std::vector<std::size_t> dropped, replacement;
    for (std::size_t id = 0; id < nodes.size(); ++id) {
        const Node& bn = nodes[id];
        if (bn.op != OpKind::batch_norm) continue;
        const std::size_t src = bn.inputs.front();
        Node& conv = nodes[src];
        const std::string label = bn.name.empty() ? "node " + std::to_string(id) : bn.name;
        if (conv.op != OpKind::conv) {
            report.diagnostics.push_back(label + ": input is " + std::string(op_name(conv.op)) + ", not conv; left unfused");
            continue;
        }
        if (uses[src] != 1) {
            report.diagnostics.push_back(label + ": conv " + conv.name + " has " + std::to_string(uses[src]) +
                                         " consumers; left unfused");
            continue;
        }
        conv.conv = fuse_conv_bn(conv.conv, bn.bn);
        conv.name += "+" + bn.name;
        dropped.push_back(id);
        replacement.push_back(src);
        ++report.fused;
    }
    graph.remove(dropped, replacement);
    return report;
}

std::vector<std::vector<std::uint8_t>> prune_magnitude(std::span<const std::span<double>> weights, double sparsity)
{
    if (!(sparsity >= 0.0 && sparsity < 1.0)) {
        throw UsageError("prune: sparsity must be in [0, 1), got " + std::to_string(sparsity));
    }
    struct Entry {
        double magnitude;
        std::size_t span, index;
    };
    std::vector<Entry> all;
    std::vector<std::vector<std::uint8_t>> masks;
    for (std::size_t s = 0; s < weights.size(); ++s) {
        masks.emplace_back(weights[s].size(), 1);
        for (std::size_t i = 0; i < weights[s].size(); ++i) all.push_back({std::abs(weights[s][i]), s, i});
    }
    const auto k = static_cast<std::size_t>(std::floor(sparsity * static_cast<double>(all.size())));
    // stable: ties keep parameter order
    std::stable_sort(all.begin(), all.end(), [](const Entry& a, const Entry& b) { return a.magnitude < b.magnitude; });
    for (std::size_t i = 0; i < k; ++i) {
        weights[all[i].span][all[i].index] = 0.0;
        masks[all[i].span][all[i].index] = 0;
    }
    return masks;
}

PruneReport prune_magnitude(InferenceGraph& graph, double sparsity)
{
    std::vector<std::span<double>> spans;
    std::vector<Node*> convs;
    PruneReport report;
    std::size_t zeros_before = 0;
    for (auto& n : graph.mutable_nodes()) {
        if (n.op != OpKind::conv) continue;
        spans.emplace_back(n.conv.weight);
        convs.push_back(&n);
        report.weights += n.conv.weight.size();
        zeros_before += static_cast<std::size_t>(std::count(n.conv.weight.begin(), n.conv.weight.end(), 0.0));
    }
    auto masks = prune_magnitude(spans, sparsity);
    std::size_t zeros_after = 0;
    for (std::size_t i = 0; i < convs.size(); ++i) {
        auto& mask = convs[i]->conv.mask;
        if (mask.empty()) {
            mask = std::move(masks[i]);
        } else {
            for (std::size_t j = 0; j < mask.size(); ++j) mask[j] = mask[j] && masks[i][j];
        }
        const auto& w = convs[i]->conv.weight;
        zeros_after += static_cast<std::size_t>(std::count(w.begin(), w.end(), 0.0));
    }
    report.pruned = static_cast<std::size_t>(std::floor(sparsity * static_cast<double>(report.weights)));
    report.newly_zeroed = zeros_after - zeros_before;
    report.sparsity = report.weights ? static_cast<double>(zeros_after) / static_cast<double>(report.weights) : 0.0;
    return report;
}

} // namespace insitu::graph
