#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>

// Row-level forward kernels shared by the batch (graph) ops and the streaming
// inference path. Both paths must produce bit-identical values, so every
// accumulation order here is fixed and nothing may reorder these loops.

namespace phaseseg::kernels {

// out[j] = b[j] + sum_i x[i] * W[i*d_out + j]
inline void linear_row(const double* x, const double* w, const double* b, int d_in, int d_out, double* out) {
    for (int j = 0; j < d_out; ++j) out[j] = b ? b[j] : 0.0;
    for (int i = 0; i < d_in; ++i) {
        const double xv = x[i];
        const double* wrow = w + static_cast<std::size_t>(i) * d_out;
        for (int j = 0; j < d_out; ++j) out[j] += xv * wrow[j];
    }
}

// Causal dilated conv output row t. x is the input history (T_avail x d_in,
// rows 0..t valid), w is [k x d_in x d_out] row-major, tap k-1 sits on frame t.
// Frames before 0 are zero padding.
inline void conv_row(const double* x, int d_in, const double* w, const double* b, int k, int dilation, int d_out,
                     int t, double* out) {
    for (int j = 0; j < d_out; ++j) out[j] = b ? b[j] : 0.0;
    for (int tap = 0; tap < k; ++tap) {
        const int tt = t - (k - 1 - tap) * dilation;
        if (tt < 0) continue;
        const double* xrow = x + static_cast<std::size_t>(tt) * d_in;
        const double* wtap = w + static_cast<std::size_t>(tap) * d_in * d_out;
        for (int i = 0; i < d_in; ++i) {
            const double xv = xrow[i];
            const double* wrow = wtap + static_cast<std::size_t>(i) * d_out;
            for (int j = 0; j < d_out; ++j) out[j] += xv * wrow[j];
        }
    }
}

// Numerically stabilized softmax of one row.
inline void softmax_row(const double* x, int n, double* out) {
    double m = x[0];
    for (int i = 1; i < n; ++i) m = std::max(m, x[i]);
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        out[i] = std::exp(x[i] - m);
        sum += out[i];
    }
    const double inv = 1.0 / sum;
    for (int i = 0; i < n; ++i) out[i] *= inv;
}

inline void log_softmax_row(const double* x, int n, double* out) {
    double m = x[0];
    for (int i = 1; i < n; ++i) m = std::max(m, x[i]);
    double sum = 0.0;
    for (int i = 0; i < n; ++i) sum += std::exp(x[i] - m);
    const double lse = m + std::log(sum);
    for (int i = 0; i < n; ++i) out[i] = x[i] - lse;
}

inline double dot(const double* a, const double* b, int n) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

// Single attention query against key/value rows [ks, ke). Writes the softmax
// weights to `weights` (size ke-ks) and the context vector to `out` (size d).
inline void attention_row(const double* q_row, const double* k_mat, const double* v_mat, int d, int ks, int ke,
                          double scale, double* weights, double* out) {
    const int n = ke - ks;
    for (int m = 0; m < n; ++m)
        weights[m] = scale * dot(q_row, k_mat + static_cast<std::size_t>(ks + m) * d, d);
    softmax_row(weights, n, weights);
    for (int j = 0; j < d; ++j) out[j] = 0.0;
    for (int m = 0; m < n; ++m) {
        const double a = weights[m];
        const double* vrow = v_mat + static_cast<std::size_t>(ks + m) * d;
        for (int j = 0; j < d; ++j) out[j] += a * vrow[j];
    }
}

// Key range for query position t under the hierarchical window schedule:
// the timeline is tiled into windows of length `window`; a query attends to
// its own window plus the previous one, masked to positions <= t.
inline void attention_span(int t, int window, int* ks, int* ke) {
    const int start = (t / window) * window;
    *ks = std::max(0, start - window);
    *ke = t + 1;
}

}  // namespace phaseseg::kernels
