#include <cstdio>
#include <ostream>
#include <sstream>

#include "insitu/app/commands.hpp"
#include "insitu/errors.hpp"
#include "insitu/graph/benchmark.hpp"
#include "insitu/graph/build.hpp"
#include "insitu/graph/passes.hpp"

namespace insitu::app {

namespace {

double graph_psnr(const graph::InferenceGraph& g, const std::vector<sr::SRSample>& samples)
{
    graph::Executor<float> exec(g);
    std::vector<metrics::QualityReport> reports;
    for (const auto& s : samples) {
        const auto out = exec.run(s.window);
        reports.push_back({"", metrics::psnr(out, s.target), 0.0});
    }
    return metrics::mean_over_sequence(reports).mean_psnr_db;
}

} // namespace

int cmd_bench(const BenchCommandOptions& o, std::ostream& log)
{
    if (!fs::exists(o.checkpoint)) throw DataError(o.checkpoint.string() + ": checkpoint not found (run train-sr)");
    const auto model = sr::ViTSR::load(o.checkpoint);
    const auto samples = sr_samples(load_clips(o.data), model.config().N);
    if (samples.empty()) throw DataError(o.data.string() + ": no evaluation windows");
    const auto h = samples.front().window.dim(1), w = samples.front().window.dim(2);

    graph::BenchOptions bo;
    bo.warmup = o.warmup;
    bo.iterations = o.iterations;
    bo.seed = o.seed;
    bo.threads = o.threads;

    std::ostringstream csv;
    csv << "variant,sparsity,fused,mean_ms,p50_ms,p95_ms,psnr_db\n";
    auto name = std::string(sr::variant_name(model.config().variant));
    if (o.threads > 1) name += "@threads=" + std::to_string(o.threads);
    for (const double s : o.sparsities) {
        for (const bool fused : {false, true}) {
            auto g = graph::build_graph(model, h, w);
            if (s > 0.0) graph::prune_magnitude(g, s);
            if (fused) graph::fuse_conv_bn(g);
            const auto r = graph::benchmark(g, name, bo);
            const double psnr = graph_psnr(g, samples);
            char row[256];
            std::snprintf(row, sizeof row, "%s,%.4f,%d,%.4f,%.4f,%.4f,%.4f\n", name.c_str(), s, fused ? 1 : 0,
                          r.mean_ms, r.p50_ms, r.p95_ms, psnr);
            csv << row;
            log << row;
        }
    }
    if (!o.csv.empty()) write_text(o.csv, csv.str());
    return 0;
}

} // namespace insitu::app
