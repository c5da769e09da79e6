#pragma once

#include <vector>

#include "hdrt/nn/tensor.hpp"

namespace hdrt::nn {

struct AdamConfig {
    double lr = 4e-5;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    long halve_every = 20000;  ///< steps; <= 0 disables the schedule
};

/// Adam with a step-halving learning-rate schedule.
class Adam {
public:
    Adam(std::vector<Tensor> params, AdamConfig cfg = {});

    /// One update of every parameter that still requires a gradient. Throws
    /// NnError if such a parameter has no gradient.
    void step();
    void zero_grad();

    /// Learning rate that the next step() will use.
    double lr() const;
    long steps() const { return t_; }
    const AdamConfig& config() const { return cfg_; }

private:
    std::vector<Tensor> params_;
    std::vector<std::vector<float>> m_, v_;
    AdamConfig cfg_;
    long t_ = 0;
};

}  // namespace hdrt::nn
