#pragma once

#include <span>
#include <vector>

#include "insitu/sr/vitsr.hpp"
#include "insitu/tensor/optim.hpp"

namespace insitu::sr {

struct SRSample {
    Tensor window; // [2N+1, h, w] low-resolution Y
    Tensor target; // [1, r*h, r*w] high-resolution Y of the reference
};

class SRTrainer {
public:
    SRTrainer(ViTSR& model, double lr);

    /// Mean MSE over the batch, then one Adam update. A non-finite loss
    /// raises NumericError and leaves the parameters untouched.
    double step(std::span<const SRSample> batch);

    /// Loss without updating anything (eval-mode BN unless `training`).
    double loss(std::span<const SRSample> batch, bool training = false);

    tensor::Adam& optimizer() { return adam_; }

private:
    ViTSR& model_;
    tensor::Adam adam_;
};

} // namespace insitu::sr
