#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "insitu/app/data.hpp"
#include "insitu/metrics/metrics.hpp"
#include "insitu/seg/fcn.hpp"
#include "insitu/sr/config.hpp"
#include "insitu/sr/vitsr.hpp"

namespace insitu::app {

inline constexpr const char* kVersion = "0.1.0";

// Every cmd_* returns the process exit code for conditions it reports
// itself and throws insitu::Error subclasses for everything else.

struct SynthOptions {
    std::string kind = "motion"; // motion | meltpool
    std::size_t count = 10;
    std::uint64_t seed = 0;
    std::size_t r = 4;
    std::size_t frames = 8; // motion only
    std::size_t size = 0;   // HR edge; 0 keeps the generator default
    bool halo = true;       // meltpool only
    fs::path out;
};

int cmd_synth(const SynthOptions& options, std::ostream& log);

struct DownscaleOptions {
    fs::path input, output;
    std::size_t r = 4;
};

/// Every PNG in `input` is nearest-downscaled into `output` under the same
/// name (r = 1 copies the file bytes), and output/pairs.csv lists the
/// pairs. A failing file is reported on `err` and skipped; the exit code
/// is then 2.
int cmd_downscale(const DownscaleOptions& options, std::ostream& log, std::ostream& err);

/// Adam step size at `step` (0-based): linear warmup over `warmup` steps
/// times a half-cosine decay to zero at `steps`.
double lr_at(double lr, std::size_t step, std::size_t steps, std::size_t warmup);

struct TrainSROptions {
    sr::ViTSRConfig model;
    fs::path data;       // clip root (see load_clips)
    fs::path checkpoint; // output
    std::optional<fs::path> loss_log;
    std::size_t batch = 4;
    std::size_t warmup = 100;
    std::size_t log_every = 50;
};

/// Batches are drawn uniformly with replacement from a generator seeded by
/// model.seed. Progress lines go to `log` when given.
sr::ViTSR train_sr(const TrainSROptions& options, const std::vector<sr::SRSample>& samples,
                   std::vector<double>* losses = nullptr, std::ostream* log = nullptr);

int cmd_train_sr(const TrainSROptions& options, std::ostream& log);

struct TrainSegOptions {
    seg::FCNConfig model;
    fs::path data;
    fs::path checkpoint;
    std::optional<fs::path> loss_log;
    std::size_t steps = 300;
    double lr = 3e-3;
    std::size_t batch = 4;
    std::size_t log_every = 50;
};

seg::FCN train_seg(const TrainSegOptions& options, const std::vector<seg::SegSample>& samples,
                   std::vector<double>* losses = nullptr, std::ostream* log = nullptr);

int cmd_train_seg(const TrainSegOptions& options, std::ostream& log);

/// Super-resolved Y plus bicubic chroma, as written by superres/pipeline.
struct SRFrame {
    Tensor y;   // [1, rH, rW], unclamped network output
    Tensor rgb; // [3, rH, rW] in [0, 1]
};

/// Runs the model on window t of an LR colour sequence.
SRFrame super_resolve_frame(sr::ViTSR& model, const std::vector<video::ColorFrame>& lr, std::size_t t);

struct SuperresOptions {
    fs::path checkpoint, input, output;
};

int cmd_superres(const SuperresOptions& options, std::ostream& log);

struct SegmentOptions {
    std::string method = "fcn"; // fcn or a classical method name
    fs::path checkpoint;        // fcn only
    fs::path input, output;
};

/// Writes masks/ and areas.csv. Classical methods write binary masks
/// (label 1 = foreground) and a frame_index,foreground_px,threshold CSV.
int cmd_segment(const SegmentOptions& options, std::ostream& log);

struct EvalOptions {
    fs::path estimate, reference;
    fs::path csv;
    double peak = 1.0;
    bool eight_bit = false; // Y quantized to 0..255 levels, peak 255
};

/// frame_id,psnr_db,ssim rows over Y planes, then a "mean" row over finite
/// PSNR values.
std::string quality_csv(const std::vector<metrics::QualityReport>& reports);

int cmd_eval(const EvalOptions& options, std::ostream& log);

struct BenchCommandOptions {
    fs::path checkpoint;
    fs::path data; // clip root; PSNR is measured on its windows
    fs::path csv;
    std::vector<double> sparsities{0.0};
    std::size_t warmup = 5, iterations = 30;
    std::uint64_t seed = 0;
    std::size_t threads = 1;
};

/// One row per (sparsity, fused) pair:
/// variant,sparsity,fused,mean_ms,p50_ms,p95_ms,psnr_db. With threads > 1
/// the variant reads e.g. "full@threads=2".
int cmd_bench(const BenchCommandOptions& options, std::ostream& log);

struct PipelineConfig {
    fs::path input;  // LR frames, or a directory holding lr/ (and gt/)
    fs::path output;
    fs::path sr_checkpoint, seg_checkpoint;
    std::optional<fs::path> reference; // GT frames; defaults to input/gt when present
    std::uint64_t seed = 0;
    bool deterministic = true;
    std::size_t threads = 0; // non-deterministic mode; 0 = hardware concurrency
    double peak = 1.0;

    /// UsageError when any two paths coincide.
    void validate() const;
};

struct StageTimes {
    std::size_t frames = 0;
    double total_s = 0.0, load_s = 0.0, sr_s = 0.0, seg_s = 0.0, write_s = 0.0;
};

/// Writes sr/, masks/, areas.csv, quality.csv (with GT) and manifest.json
/// under config.output.
StageTimes run_pipeline(const PipelineConfig& config);

int cmd_pipeline(const PipelineConfig& config, std::ostream& log);

} // namespace insitu::app
