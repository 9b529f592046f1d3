#include "phaseseg/loss.hpp"

namespace phaseseg {

void LossConfig::validate() const {
    if (lambda < 0.0) throw ParameterError("lambda must be non-negative");
    if (clamp_hi < 0.0) throw ParameterError("clamp_hi must be non-negative");
}

TensorPtr cross_entropy(const TensorPtr& logits, const std::vector<int>& labels) {
    return cross_entropy_mean(logits, labels);
}

TensorPtr smoothing_loss(const TensorPtr& logits, const LossConfig& cfg) {
    cfg.validate();
    return smoothing_loss_op(logits, cfg.clamp_hi, cfg.stop_prev);
}

TensorPtr total_loss(const std::vector<TensorPtr>& stage_logits, const std::vector<int>& labels,
                     const LossConfig& cfg) {
    cfg.validate();
    if (stage_logits.empty()) throw DataError("total_loss: no stages");
    TensorPtr total;
    for (const auto& logits : stage_logits) {
        TensorPtr term = cross_entropy(logits, labels);
        if (cfg.lambda != 0.0)
            term = add(term, scale(smoothing_loss(logits, cfg), cfg.lambda));
        total = total ? add(total, term) : term;
    }
    return total;
}

}  // namespace phaseseg
