#pragma once

#include <vector>

#include "phaseseg/tensor.hpp"

namespace phaseseg {

struct AdamConfig {
    double learning_rate = 5e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// Bias-corrected Adam over a fixed parameter list. Reads param->grad,
/// updates param->data in place.
class Adam {
public:
    Adam(std::vector<TensorPtr> params, AdamConfig cfg);

    void step();
    void zero_grad();
    std::int64_t steps() const { return t_; }
    const AdamConfig& config() const { return cfg_; }

private:
    std::vector<TensorPtr> params_;
    AdamConfig cfg_;
    std::vector<std::vector<double>> m_;
    std::vector<std::vector<double>> v_;
    std::int64_t t_ = 0;
};

}  // namespace phaseseg
