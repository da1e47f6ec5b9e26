#include "insitu/sr/train.hpp"

#include <cmath>

#include "insitu/tensor/ops.hpp"

namespace insitu::sr {

using namespace insitu::tensor;

SRTrainer::SRTrainer(ViTSR& model, double lr) : model_(model), adam_(model.parameters(), AdamOptions{lr})
{
}

double SRTrainer::step(std::span<const SRSample> batch)
{
    if (batch.empty()) throw UsageError("train_step: empty batch");
    adam_.zero_grad();
    Tensor total;
    try {
        for (const auto& s : batch) {
            Tensor l = mse_loss(model_.forward(s.window, true), s.target);
            total = total.defined() ? add(total, l) : l;
        }
        total = scale(total, 1.0 / static_cast<double>(batch.size()));
    } catch (const NumericError& e) {
        throw NumericError(std::string("train_step: non-finite value at step ") +
                           std::to_string(adam_.steps_taken()) + ": " + e.what());
    }
    const double value = total.item();
    total.backward();
    for (const auto& p : adam_.parameters()) {
        for (double g : p.grad()) {
            if (!std::isfinite(g)) {
                throw NumericError("train_step: non-finite gradient at step " + std::to_string(adam_.steps_taken()));
            }
        }
    }
    adam_.step();
    return value;
}

double SRTrainer::loss(std::span<const SRSample> batch, bool training)
{
    NoGradGuard guard;
    double total = 0.0;
    for (const auto& s : batch) total += mse_loss(model_.forward(s.window, training), s.target).item();
    return total / static_cast<double>(batch.size());
}

} // namespace insitu::sr
