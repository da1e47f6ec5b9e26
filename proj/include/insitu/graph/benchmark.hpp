#pragma once

#include <cstdint>
#include <string>

#include "insitu/graph/graph.hpp"

namespace insitu::graph {

struct LatencyReport {
    std::string variant;
    std::size_t warmup = 0, iterations = 0;
    double mean_ms = 0.0, p50_ms = 0.0, p95_ms = 0.0;
    Shape input_shape;
    std::string precision; // "f32" or "f64"
    std::size_t threads = 1;
};

struct BenchOptions {
    std::size_t warmup = 5;
    std::size_t iterations = 30;
    std::uint64_t seed = 0;
    bool single_precision = true;
    std::size_t threads = 1; // > 1: one executor per thread, latencies pooled
};

/// Times full forwards of `graph` on a fixed uniform [0, 1) input drawn
/// from `seed` with a monotonic clock. Single-threaded by default; with
/// threads > 1 every thread does its own warmup and iterations and the
/// report carries the thread count. Warmup runs are not recorded;
/// percentiles are nearest-rank.
LatencyReport benchmark(const InferenceGraph& graph, const std::string& variant, const BenchOptions& options = {});

} // namespace insitu::graph
