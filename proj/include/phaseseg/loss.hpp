#pragma once

#include <vector>

#include "phaseseg/ops.hpp"

namespace phaseseg {

struct LossConfig {
    double lambda = 0.15;   // weight of the smoothing term
    double clamp_hi = 16.0; // squared log-probability deltas are clamped here
    bool stop_prev = true;  // do not propagate gradient through the t-1 term

    void validate() const;
};

// Mean frame-wise cross-entropy between softmax(logits) and the labels.
TensorPtr cross_entropy(const TensorPtr& logits, const std::vector<int>& labels);

// Truncated MSE over per-frame log-probability deltas: for T >= 2,
// (1/(T*C)) * sum_{t>=1, c} clamp((ls[t,c] - ls[t-1,c])^2, 0, clamp_hi).
// Zero for T < 2.
TensorPtr smoothing_loss(const TensorPtr& logits, const LossConfig& cfg);

// Sum over stages of cross_entropy + lambda * smoothing_loss.
TensorPtr total_loss(const std::vector<TensorPtr>& stage_logits, const std::vector<int>& labels,
                     const LossConfig& cfg);

}  // namespace phaseseg
