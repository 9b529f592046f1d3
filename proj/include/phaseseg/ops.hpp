#pragma once

#include <vector>

#include "phaseseg/tensor.hpp"

namespace phaseseg {

TensorPtr add(const TensorPtr& a, const TensorPtr& b);
TensorPtr scale(const TensorPtr& a, double factor);
TensorPtr relu(const TensorPtr& x);
TensorPtr sum(const TensorPtr& x);

/// Standard matrix product, a: [m x k], b: [k x n].
TensorPtr matmul(const TensorPtr& a, const TensorPtr& b);

/// x: [T x d_in], w: [d_in x d_out], b: [d_out] or null. Same accumulation
/// order as matmul + bias, evaluated row by row.
TensorPtr linear(const TensorPtr& x, const TensorPtr& w, const TensorPtr& b);

/// Softmax along `axis` of a 1-D or 2-D tensor, max-subtracted.
TensorPtr softmax(const TensorPtr& x, int axis);

/// Causal dilated 1-D convolution. x: [T x d_in], w: [k x d_in x d_out],
/// b: [d_out] or null. Output length equals T; frame t sees frames
/// t, t-dilation, ..., t-(k-1)*dilation with zero padding on the left.
TensorPtr causal_dilated_conv1d(const TensorPtr& x, const TensorPtr& w, const TensorPtr& b, int dilation);

/// Hierarchical causal windowed attention, single head. q, k, v: [T x d].
/// Query t attends to its length-`window` timeline window plus the previous
/// window, restricted to positions <= t. Scores are scaled by 1/sqrt(d).
TensorPtr windowed_causal_attention(const TensorPtr& q, const TensorPtr& k, const TensorPtr& v, int window);

/// Mean over frames of -log softmax(logits)[t, labels[t]]. logits: [T x C].
TensorPtr cross_entropy_mean(const TensorPtr& logits, const std::vector<int>& labels);

/// Clamped truncated-MSE smoothing term on log-softmax frame differences:
/// (1/(T*C)) * sum_{t>=2} sum_c clamp(delta^2, 0, clamp_hi). When stop_prev
/// is set, no gradient flows through the t-1 log-probabilities.
TensorPtr smoothing_loss_op(const TensorPtr& logits, double clamp_hi, bool stop_prev);

}  // namespace phaseseg
