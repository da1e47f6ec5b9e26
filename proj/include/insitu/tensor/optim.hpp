#pragma once

#include <vector>

#include "insitu/tensor/tensor.hpp"

namespace insitu::tensor {

struct AdamOptions {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// Adam with bias correction. Holds references to the parameter tensors it
/// updates; `step()` consumes their accumulated gradients.
class Adam {
public:
    Adam(std::vector<Tensor> params, AdamOptions options);

    void zero_grad();
    void step();

    const AdamOptions& options() const { return options_; }
    void set_lr(double lr) { options_.lr = lr; }
    const std::vector<Tensor>& parameters() const { return params_; }
    long steps_taken() const { return t_; }

private:
    std::vector<Tensor> params_;
    std::vector<std::vector<double>> m_, v_;
    AdamOptions options_;
    long t_ = 0;
};

} // namespace insitu::tensor
