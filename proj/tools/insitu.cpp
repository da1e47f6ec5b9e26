#include <algorithm>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "insitu/app/commands.hpp"
#include "insitu/classical/segment.hpp"
#include "insitu/errors.hpp"

namespace app = insitu::app;

namespace {

struct ModelFlags {
    std::string variant = "full";
};

void add_model_flags(CLI::App* cmd, insitu::sr::ViTSRConfig& c, ModelFlags& f)
{
    cmd->add_option("--N", c.N, "neighbour radius")->capture_default_str();
    cmd->add_option("--r", c.r, "upscale factor")->capture_default_str();
    cmd->add_option("--n_cells", c.n_cells, "residual cells")->capture_default_str();
    cmd->add_option("--feat_channels", c.feat_channels, "feature width")->capture_default_str();
    cmd->add_option("--variant", f.variant, "full, d1, d2 or d3")->capture_default_str();
    cmd->add_flag("--channel_dot", c.channel_dot, "similarity summed over channels");
    cmd->add_option("--lr", c.lr, "peak Adam step size")->capture_default_str();
    cmd->add_option("--steps", c.steps, "optimizer steps")->capture_default_str();
    cmd->add_option("--seed", c.seed, "initialization and sampling seed")->capture_default_str();
}

std::vector<double> parse_list(const std::string& s)
{
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos <= s.size()) {
        const auto comma = s.find(',', pos);
        const auto item = s.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::logic_error&) {
            throw insitu::UsageError("bad number '" + item + "' in list '" + s + "'");
        }
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return out;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App cli("In-situ monitoring toolkit: video super resolution and melt-pool segmentation");
    cli.require_subcommand(1);
    cli.set_config("--config", "", "INI file; keys go in a section named after the subcommand");
    cli.set_version_flag("--version", app::kVersion);

    app::SynthOptions synth;
    auto* c_synth = cli.add_subcommand("synth", "generate a synthetic dataset");
    c_synth->add_option("--kind", synth.kind, "motion or meltpool")->capture_default_str();
    c_synth->add_option("--count", synth.count, "clips (motion) or frames (meltpool)")->capture_default_str();
    c_synth->add_option("--seed", synth.seed)->capture_default_str();
    c_synth->add_option("--r", synth.r, "LR scale for motion clips")->capture_default_str();
    c_synth->add_option("--frames", synth.frames, "frames per motion clip")->capture_default_str();
    c_synth->add_option("--size", synth.size, "HR edge length (0: generator default)")->capture_default_str();
    c_synth->add_flag("!--no-halo", synth.halo, "meltpool frames without the arc halo");
    c_synth->add_option("--out", synth.out)->required();

    app::DownscaleOptions down;
    auto* c_down = cli.add_subcommand("downscale", "nearest-neighbour LR frames from GT frames");
    c_down->add_option("--in", down.input)->required();
    c_down->add_option("--out", down.output)->required();
    c_down->add_option("--r", down.r)->capture_default_str();

    app::TrainSROptions tsr;
    ModelFlags tsr_flags;
    std::string tsr_loss;
    auto* c_tsr = cli.add_subcommand("train-sr", "train a ViTSR checkpoint");
    add_model_flags(c_tsr, tsr.model, tsr_flags);
    c_tsr->add_option("--data", tsr.data, "clip root with lr/ and gt/")->required();
    c_tsr->add_option("--out", tsr.checkpoint, "checkpoint to write")->required();
    c_tsr->add_option("--batch", tsr.batch)->capture_default_str();
    c_tsr->add_option("--warmup", tsr.warmup, "linear warmup steps")->capture_default_str();
    c_tsr->add_option("--log-every", tsr.log_every)->capture_default_str();
    c_tsr->add_option("--loss-log", tsr_loss, "CSV of per-step losses");

    app::TrainSegOptions tseg;
    std::string tseg_loss;
    std::vector<std::size_t> tseg_channels(tseg.model.channels.begin(), tseg.model.channels.end());
    auto* c_tseg = cli.add_subcommand("train-seg", "train an FCN checkpoint");
    c_tseg->add_option("--data", tseg.data, "directory with frames/ and masks/")->required();
    c_tseg->add_option("--out", tseg.checkpoint)->required();
    c_tseg->add_option("--channels", tseg_channels, "three stage widths")->expected(3)->capture_default_str();
    c_tseg->add_option("--steps", tseg.steps)->capture_default_str();
    c_tseg->add_option("--lr", tseg.lr)->capture_default_str();
    c_tseg->add_option("--batch", tseg.batch)->capture_default_str();
    c_tseg->add_option("--seed", tseg.model.seed)->capture_default_str();
    c_tseg->add_option("--log-every", tseg.log_every)->capture_default_str();
    c_tseg->add_option("--loss-log", tseg_loss);

    app::SuperresOptions sres;
    auto* c_sres = cli.add_subcommand("superres", "super-resolve an LR frame directory");
    c_sres->add_option("--checkpoint", sres.checkpoint)->required();
    c_sres->add_option("--in", sres.input)->required();
    c_sres->add_option("--out", sres.output)->required();

    app::SegmentOptions segm;
    auto* c_seg = cli.add_subcommand("segment", "segment a frame directory");
    c_seg->add_option("--method", segm.method, "fcn, otsu, triangle, maxentropy, watershed or bgt")
        ->capture_default_str();
    c_seg->add_option("--checkpoint", segm.checkpoint, "FCN checkpoint");
    c_seg->add_option("--in", segm.input)->required();
    c_seg->add_option("--out", segm.output)->required();

    app::EvalOptions ev;
    auto* c_eval = cli.add_subcommand("eval", "PSNR/SSIM of estimated frames against references");
    c_eval->add_option("--pred", ev.estimate)->required();
    c_eval->add_option("--gt", ev.reference)->required();
    c_eval->add_option("--csv", ev.csv, "output CSV (stdout when omitted)");
    c_eval->add_option("--peak", ev.peak)->capture_default_str();
    c_eval->add_flag("--8bit", ev.eight_bit, "quantize Y to 8-bit levels and use peak 255");

    app::BenchCommandOptions bench;
    std::string sparsities = "0";
    auto* c_bench = cli.add_subcommand("bench", "latency and PSNR of fused/pruned inference graphs");
    c_bench->add_option("--checkpoint", bench.checkpoint)->required();
    c_bench->add_option("--data", bench.data, "clip root for PSNR")->required();
    c_bench->add_option("--csv", bench.csv);
    c_bench->add_option("--sparsity", sparsities, "comma-separated list")->capture_default_str();
    c_bench->add_option("--warmup", bench.warmup)->capture_default_str();
    c_bench->add_option("--iterations", bench.iterations)->capture_default_str();
    c_bench->add_option("--seed", bench.seed)->capture_default_str();
    c_bench->add_option("--threads", bench.threads, "concurrent executors; labels the variant column")
        ->capture_default_str();

    app::PipelineConfig pipe;
    std::string pipe_ref;
    auto* c_pipe = cli.add_subcommand("pipeline", "super resolution, segmentation, areas and quality");
    c_pipe->add_option("--in", pipe.input, "LR frames, or a directory with lr/ and gt/")->required();
    c_pipe->add_option("--out", pipe.output)->required();
    c_pipe->add_option("--sr-checkpoint", pipe.sr_checkpoint)->required();
    c_pipe->add_option("--seg-checkpoint", pipe.seg_checkpoint)->required();
    c_pipe->add_option("--gt", pipe_ref, "GT frames (default: <in>/gt when present)");
    c_pipe->add_option("--seed", pipe.seed)->capture_default_str();
    c_pipe->add_flag("!--parallel", pipe.deterministic, "frame-level threads; output order is unchanged");
    c_pipe->add_option("--threads", pipe.threads, "with --parallel; 0 = all cores")->capture_default_str();
    c_pipe->add_option("--peak", pipe.peak)->capture_default_str();

    for (auto* sub : cli.get_subcommands({})) sub->fallthrough();

    try {
        cli.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = cli.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*c_synth) return app::cmd_synth(synth, std::cout);
        if (*c_down) return app::cmd_downscale(down, std::cout, std::cerr);
        if (*c_tsr) {
            tsr.model.variant = insitu::sr::parse_variant(tsr_flags.variant);
            if (!tsr_loss.empty()) tsr.loss_log = tsr_loss;
            return app::cmd_train_sr(tsr, std::cout);
        }
        if (*c_tseg) {
            if (!tseg_loss.empty()) tseg.loss_log = tseg_loss;
            std::copy(tseg_channels.begin(), tseg_channels.end(), tseg.model.channels.begin());
            return app::cmd_train_seg(tseg, std::cout);
        }
        if (*c_sres) return app::cmd_superres(sres, std::cout);
        if (*c_seg) return app::cmd_segment(segm, std::cout);
        if (*c_eval) return app::cmd_eval(ev, std::cout);
        if (*c_bench) {
            bench.sparsities = parse_list(sparsities);
            return app::cmd_bench(bench, std::cout);
        }
        if (*c_pipe) {
            if (!pipe_ref.empty()) pipe.reference = pipe_ref;
            return app::cmd_pipeline(pipe, std::cout);
        }
    } catch (const insitu::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
