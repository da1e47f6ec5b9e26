#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "insitu/graph/graph.hpp"

namespace insitu::graph {

/// Folds inference-mode BN into the preceding conv:
/// w' = w * g / sqrt(var + eps) per output channel, b' = beta + (b - mean) * g / sqrt(var + eps).
ConvParams fuse_conv_bn(const ConvParams& conv, const BatchNormParams& bn);

struct FusionReport {
    std::size_t fused = 0;
    std::vector<std::string> diagnostics; // one line per BN left in place
};

/// Fuses every conv -> BN pair where the BN is the conv's only consumer.
/// Each fused pair removes exactly one node.
FusionReport fuse_conv_bn(InferenceGraph& graph);

/// Zeroes the floor(sparsity * n) smallest-magnitude entries across all
/// spans (global ranking; equal magnitudes go in span-then-index order).
/// Returns one keep-mask per span. UsageError unless 0 <= sparsity < 1.
std::vector<std::vector<std::uint8_t>> prune_magnitude(std::span<const std::span<double>> weights, double sparsity);

struct PruneReport {
    std::size_t weights = 0;      // conv weights considered
    std::size_t pruned = 0;       // floor(sparsity * weights)
    std::size_t newly_zeroed = 0; // pruned entries that were nonzero before
    double sparsity = 0.0;        // zero fraction of conv weights afterwards
};

/// Magnitude pruning of conv weights; biases and BN parameters are exempt.
/// The keep-mask is stored on each conv node.
PruneReport prune_magnitude(InferenceGraph& graph, double sparsity);

} // namespace insitu::graph
