#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "phaseseg/errors.hpp"
#include "phaseseg/rng.hpp"

namespace phaseseg {

class Tensor;
using TensorPtr = std::shared_ptr<Tensor>;

/// Dense row-major tensor with an optional gradient buffer. Ops record the
/// backward pass as a closure; Tensor::backward replays the recorded graph in
/// reverse topological order exactly once per node.
class Tensor {
public:
    std::vector<int> shape;
    std::vector<double> data;
    std::vector<double> grad;  // allocated lazily during backward
    bool requires_grad = false;

    // graph edges; empty for leaves
    std::vector<TensorPtr> parents;
    std::function<void()> backward_fn;

    static TensorPtr create(std::vector<int> shape, bool requires_grad = false);
    static TensorPtr from_data(std::vector<int> shape, std::vector<double> values, bool requires_grad = false);
    static TensorPtr scalar(double value, bool requires_grad = false);
    static TensorPtr uniform(std::vector<int> shape, Rng& rng, double lo, double hi, bool requires_grad = false);

    std::int64_t numel() const { return static_cast<std::int64_t>(data.size()); }
    int ndim() const { return static_cast<int>(shape.size()); }
    int rows() const { return shape.at(0); }
    int cols() const { return shape.size() > 1 ? shape[1] : 1; }

    double& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols() + c]; }
    double at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols() + c]; }

    bool all_finite() const;
    void ensure_grad();
    void zero_grad();

    /// Reverse-mode sweep from a scalar output.
    void backward();
    /// Reverse-mode sweep with an explicit output seed (same length as data).
    void backward_seed(const std::vector<double>& seed);
};

std::int64_t shape_numel(const std::vector<int>& shape);
std::string shape_str(const std::vector<int>& shape);

/// Index of the row-wise maximum (first index on ties) for a T x C tensor.
std::vector<int> argmax_rows(const Tensor& t);
int argmax_row(const double* row, int n);

}  // namespace phaseseg
