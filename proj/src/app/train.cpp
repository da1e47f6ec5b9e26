#include <chrono>
#include <cmath>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

#include "insitu/app/commands.hpp"
#include "insitu/errors.hpp"
#include "insitu/sr/train.hpp"

namespace insitu::app {

namespace {

template <class Sample>
std::vector<Sample> draw(const std::vector<Sample>& pool, std::size_t n, std::mt19937_64& rng)
{
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    std::vector<Sample> batch;
    batch.reserve(n);
    for (std::size_t k = 0; k < n; ++k) batch.push_back(pool[pick(rng)]);
    return batch;
}

std::string loss_csv(const std::vector<double>& losses)
{
    std::ostringstream s;
    s.precision(9);
    s << "step,loss\n";
    for (std::size_t i = 0; i < losses.size(); ++i) s << i + 1 << "," << losses[i] << "\n";
    return s.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

} // namespace

double lr_at(double lr, std::size_t step, std::size_t steps, std::size_t warmup)
{
    const double ramp = warmup ? std::min(1.0, static_cast<double>(step + 1) / static_cast<double>(warmup)) : 1.0;
    const double decay =
        steps ? 0.5 * (1.0 + std::cos(std::numbers::pi * static_cast<double>(step) / static_cast<double>(steps)))
              : 1.0;
    return lr * ramp * decay;
}

sr::ViTSR train_sr(const TrainSROptions& o, const std::vector<sr::SRSample>& samples, std::vector<double>* losses,
                   std::ostream* log)
{
    o.model.validate();
    if (samples.empty()) throw DataError("train-sr: no training windows");
    if (o.batch == 0) throw UsageError("train-sr: batch must be >= 1");
    sr::ViTSR model(o.model);
    sr::SRTrainer trainer(model, o.model.lr);
    std::mt19937_64 rng(o.model.seed + 100);
    const auto t0 = std::chrono::steady_clock::now();
    double running = 0.0;
    for (std::size_t s = 0; s < o.model.steps; ++s) {
        trainer.optimizer().set_lr(lr_at(o.model.lr, s, o.model.steps, o.warmup));
        const double loss = trainer.step(draw(samples, o.batch, rng));
        if (losses) losses->push_back(loss);
        running += loss;
        const bool last = s + 1 == o.model.steps;
        if (log && o.log_every && ((s + 1) % o.log_every == 0 || last)) {
            const auto n = last && (s + 1) % o.log_every ? (s + 1) % o.log_every : o.log_every;
            *log << "step " << s + 1 << "/" << o.model.steps << " loss " << running / static_cast<double>(n)
                 << " (" << seconds_since(t0) << " s)\n";
            running = 0.0;
        }
    }
    return model;
}

int cmd_train_sr(const TrainSROptions& o, std::ostream& log)
{
    if (o.checkpoint.empty()) throw UsageError("train-sr: --out checkpoint path is required");
    const auto samples = sr_samples(load_clips(o.data), o.model.N);
    log << "train-sr: " << samples.size() << " windows, variant " << sr::variant_name(o.model.variant) << "\n";
    std::vector<double> losses;
    const auto model = train_sr(o, samples, &losses, &log);
    if (o.checkpoint.has_parent_path()) fs::create_directories(o.checkpoint.parent_path());
    model.save(o.checkpoint);
    if (o.loss_log) write_text(*o.loss_log, loss_csv(losses));
    log << "saved " << o.checkpoint.string() << "\n";
    return 0;
}

seg::FCN train_seg(const TrainSegOptions& o, const std::vector<seg::SegSample>& samples,
                   std::vector<double>* losses, std::ostream* log)
{
    if (samples.empty()) throw DataError("train-seg: no training frames");
    if (o.batch == 0) throw UsageError("train-seg: batch must be >= 1");
    if (!(o.lr > 0.0)) throw UsageError("train-seg: lr must be positive");
    seg::FCN model(o.model);
    seg::SegTrainer trainer(model, o.lr);
    std::mt19937_64 rng(o.model.seed + 100);
    const auto t0 = std::chrono::steady_clock::now();
    for (std::size_t s = 0; s < o.steps; ++s) {
        const double loss = trainer.step(draw(samples, o.batch, rng));
        if (losses) losses->push_back(loss);
        if (log && o.log_every && ((s + 1) % o.log_every == 0 || s + 1 == o.steps)) {
            *log << "step " << s + 1 << "/" << o.steps << " loss " << loss << " (" << seconds_since(t0) << " s)\n";
        }
    }
    return model;
}

int cmd_train_seg(const TrainSegOptions& o, std::ostream& log)
{
    if (o.checkpoint.empty()) throw UsageError("train-seg: --out checkpoint path is required");
    const auto samples = load_seg_dataset(o.data);
    log << "train-seg: " << samples.size() << " frames\n";
    std::vector<double> losses;
    const auto model = train_seg(o, samples, &losses, &log);
    if (o.checkpoint.has_parent_path()) fs::create_directories(o.checkpoint.parent_path());
    model.save(o.checkpoint);
    if (o.loss_log) write_text(*o.loss_log, loss_csv(losses));
    log << "saved " << o.checkpoint.string() << "\n";
    return 0;
}

} // namespace insitu::app
