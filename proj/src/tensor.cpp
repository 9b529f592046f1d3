#include "phaseseg/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_set>

namespace phaseseg {

std::int64_t shape_numel(const std::vector<int>& shape) {
    std::int64_t n = 1;
    for (int e : shape) {
        if (e <= 0) throw DimensionError("tensor extents must be positive, got " + shape_str(shape));
        n *= e;
    }
    return n;
}

std::string shape_str(const std::vector<int>& shape) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
    os << "]";
    return os.str();
}

TensorPtr Tensor::create(std::vector<int> shape, bool requires_grad) {
    auto t = std::make_shared<Tensor>();
    const std::int64_t n = shape_numel(shape);
    t->shape = std::move(shape);
    t->data.assign(static_cast<std::size_t>(n), 0.0);
    t->requires_grad = requires_grad;
    return t;
}

TensorPtr Tensor::from_data(std::vector<int> shape, std::vector<double> values, bool requires_grad) {
    const std::int64_t n = shape_numel(shape);
    if (static_cast<std::int64_t>(values.size()) != n)
        throw DimensionError("value count " + std::to_string(values.size()) + " does not match shape " + shape_str(shape));
    auto t = std::make_shared<Tensor>();
    t->shape = std::move(shape);
    t->data = std::move(values);
    t->requires_grad = requires_grad;
    return t;
}

TensorPtr Tensor::scalar(double value, bool requires_grad) {
    return from_data({1}, {value}, requires_grad);
}

TensorPtr Tensor::uniform(std::vector<int> shape, Rng& rng, double lo, double hi, bool requires_grad) {
    auto t = create(std::move(shape), requires_grad);
    for (double& v : t->data) v = rng.uniform(lo, hi);
    return t;
}

bool Tensor::all_finite() const {
    for (double v : data)
        if (!std::isfinite(v)) return false;
    for (double v : grad)
        if (!std::isfinite(v)) return false;
    return true;
}

void Tensor::ensure_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
}

void Tensor::zero_grad() {
    std::fill(grad.begin(), grad.end(), 0.0);
}

namespace {

// Iterative post-order DFS; reverse gives a topological order of the graph.
std::vector<Tensor*> topo_order(Tensor* root) {
    std::vector<Tensor*> order;
    std::unordered_set<Tensor*> visited;
    std::vector<std::pair<Tensor*, std::size_t>> stack;
    stack.emplace_back(root, 0);
    visited.insert(root);
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->parents.size()) {
            Tensor* p = node->parents[next].get();
            ++next;
            if (visited.insert(p).second) stack.emplace_back(p, 0);
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }
    return order;
}

void run_backward(Tensor* root) {
    std::vector<Tensor*> order = topo_order(root);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Tensor* node = *it;
        if (node->backward_fn && node->requires_grad && !node->grad.empty()) node->backward_fn();
    }
}

}  // namespace

void Tensor::backward() {
    if (numel() != 1) throw DimensionError("backward() requires a scalar output, shape is " + shape_str(shape));
    ensure_grad();
    grad[0] += 1.0;
    run_backward(this);
}

void Tensor::backward_seed(const std::vector<double>& seed) {
    if (seed.size() != data.size())
        throw DimensionError("backward seed length " + std::to_string(seed.size()) + " does not match tensor size");
    ensure_grad();
    for (std::size_t i = 0; i < seed.size(); ++i) grad[i] += seed[i];
    run_backward(this);
}

int argmax_row(const double* row, int n) {
    int best = 0;
    for (int j = 1; j < n; ++j)
        if (row[j] > row[best]) best = j;
    return best;
}

std::vector<int> argmax_rows(const Tensor& t) {
    if (t.ndim() != 2) throw DimensionError("argmax_rows expects a 2-D tensor, got " + shape_str(t.shape));
    const int rows = t.rows(), cols = t.cols();
    std::vector<int> out(static_cast<std::size_t>(rows));
    for (int i = 0; i < rows; ++i) out[i] = argmax_row(t.data.data() + static_cast<std::size_t>(i) * cols, cols);
    return out;
}

}  // namespace phaseseg
