#include "insitu/graph/benchmark.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>
#include <thread>

#include "insitu/errors.hpp"

namespace insitu::graph {

namespace {

double nearest_rank(const std::vector<double>& sorted, double pct)
{
    const auto rank = static_cast<std::size_t>(std::ceil(pct / 100.0 * static_cast<double>(sorted.size())));
    return sorted[std::clamp<std::size_t>(rank, 1, sorted.size()) - 1];
}

template <class T>
std::vector<double> time_runs(const InferenceGraph& graph, const BenchOptions& o)
{
    std::size_t n = 1;
    for (auto d : graph.input_shape()) n *= d;
    std::mt19937_64 rng(o.seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::vector<T> input(n);
    for (auto& v : input) v = static_cast<T>(uni(rng));

    Executor<T> exec(graph);
    for (std::size_t i = 0; i < o.warmup; ++i) exec.run(std::span<const T>(input));
    std::vector<double> ms;
    for (std::size_t i = 0; i < o.iterations; ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        exec.run(std::span<const T>(input));
        ms.push_back(std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());
    }
    return ms;
}

template <class T>
std::vector<double> time_parallel(const InferenceGraph& graph, const BenchOptions& o)
{
    if (o.threads <= 1) return time_runs<T>(graph, o);
    std::vector<std::vector<double>> per(o.threads);
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < o.threads; ++t) {
        pool.emplace_back([&, t] { per[t] = time_runs<T>(graph, o); });
    }
    for (auto& th : pool) th.join();
    std::vector<double> ms;
    for (const auto& p : per) ms.insert(ms.end(), p.begin(), p.end());
    return ms;
}

} // namespace

LatencyReport benchmark(const InferenceGraph& graph, const std::string& variant, const BenchOptions& o)
{
    if (o.warmup < 5 || o.iterations < 30) {
        throw UsageError("bench: need warmup >= 5 and iterations >= 30, got " + std::to_string(o.warmup) + " and " +
                         std::to_string(o.iterations));
    }
    if (o.threads < 1) throw UsageError("bench: threads must be >= 1");
    auto ms = o.single_precision ? time_parallel<float>(graph, o) : time_parallel<double>(graph, o);
    LatencyReport r;
    r.variant = variant;
    r.warmup = o.warmup;
    r.iterations = o.iterations;
    r.input_shape = graph.input_shape();
    r.precision = o.single_precision ? "f32" : "f64";
    r.threads = o.threads;
    r.mean_ms = std::accumulate(ms.begin(), ms.end(), 0.0) / static_cast<double>(ms.size());
    std::sort(ms.begin(), ms.end());
    r.p50_ms = nearest_rank(ms, 50.0);
    r.p95_ms = nearest_rank(ms, 95.0);
    return r;
}

} // namespace insitu::graph
