#include "phaseseg/adam.hpp"

#include <cmath>

namespace phaseseg {

Adam::Adam(std::vector<TensorPtr> params, AdamConfig cfg) : params_(std::move(params)), cfg_(cfg) {
    if (cfg_.learning_rate <= 0.0) throw ParameterError("adam: learning rate must be positive");
    if (cfg_.epsilon <= 0.0) throw ParameterError("adam: epsilon must be positive");
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    for (const auto& p : params_) {
        m_.emplace_back(p->data.size(), 0.0);
        v_.emplace_back(p->data.size(), 0.0);
    }
}

void Adam::step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params_.size(); ++i) {
        Tensor& p = *params_[i];
        p.ensure_grad();
        std::vector<double>& m = m_[i];
        std::vector<double>& v = v_[i];
        for (std::size_t j = 0; j < p.data.size(); ++j) {
            const double g = p.grad[j];
            m[j] = cfg_.beta1 * m[j] + (1.0 - cfg_.beta1) * g;
            v[j] = cfg_.beta2 * v[j] + (1.0 - cfg_.beta2) * g * g;
            const double mhat = m[j] / bc1;
            const double vhat = v[j] / bc2;
            p.data[j] -= cfg_.learning_rate * mhat / (std::sqrt(vhat) + cfg_.epsilon);
        }
    }
}

void Adam::zero_grad() {
    for (const auto& p : params_) p->zero_grad();
}

}  // namespace phaseseg
