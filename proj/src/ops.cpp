#include "phaseseg/ops.hpp"

#include <cmath>
#include <string>

#include "phaseseg/kernels.hpp"

namespace phaseseg {

namespace {

TensorPtr make_op(std::vector<int> shape, std::vector<TensorPtr> parents) {
    auto out = Tensor::create(std::move(shape));
    for (const auto& p : parents)
        if (p && p->requires_grad) out->requires_grad = true;
    out->parents = std::move(parents);
    return out;
}

void require_2d(const TensorPtr& t, const char* who) {
    if (t->ndim() != 2) throw DimensionError(std::string(who) + ": expected a 2-D tensor, got " + shape_str(t->shape));
}

}  // namespace

TensorPtr add(const TensorPtr& a, const TensorPtr& b) {
    if (a->shape != b->shape)
        throw DimensionError("add: shape mismatch " + shape_str(a->shape) + " vs " + shape_str(b->shape));
    auto out = make_op(a->shape, {a, b});
    for (std::size_t i = 0; i < out->data.size(); ++i) out->data[i] = a->data[i] + b->data[i];
    Tensor* self = out.get();
    TensorPtr pa = a, pb = b;
    out->backward_fn = [self, pa, pb] {
        if (pa->requires_grad) {
            pa->ensure_grad();
            for (std::size_t i = 0; i < self->grad.size(); ++i) pa->grad[i] += self->grad[i];
        }
        if (pb->requires_grad) {
            pb->ensure_grad();
            for (std::size_t i = 0; i < self->grad.size(); ++i) pb->grad[i] += self->grad[i];
        }
    };
    return out;
}

TensorPtr scale(const TensorPtr& a, double factor) {
    auto out = make_op(a->shape, {a});
    for (std::size_t i = 0; i < out->data.size(); ++i) out->data[i] = factor * a->data[i];
    Tensor* self = out.get();
    TensorPtr pa = a;
    out->backward_fn = [self, pa, factor] {
        if (!pa->requires_grad) return;
        pa->ensure_grad();
        for (std::size_t i = 0; i < self->grad.size(); ++i) pa->grad[i] += factor * self->grad[i];
    };
    return out;
}

TensorPtr relu(const TensorPtr& x) {
    auto out = make_op(x->shape, {x});
    for (std::size_t i = 0; i < out->data.size(); ++i) out->data[i] = x->data[i] > 0.0 ? x->data[i] : 0.0;
    Tensor* self = out.get();
    TensorPtr px = x;
    out->backward_fn = [self, px] {
        if (!px->requires_grad) return;
        px->ensure_grad();
        for (std::size_t i = 0; i < self->grad.size(); ++i)
            if (px->data[i] > 0.0) px->grad[i] += self->grad[i];
    };
    return out;
}

TensorPtr sum(const TensorPtr& x) {
    auto out = make_op({1}, {x});
    double s = 0.0;
    for (double v : x->data) s += v;
    out->data[0] = s;
    Tensor* self = out.get();
    TensorPtr px = x;
    out->backward_fn = [self, px] {
        if (!px->requires_grad) return;
        px->ensure_grad();
        const double g = self->grad[0];
        for (std::size_t i = 0; i < px->grad.size(); ++i) px->grad[i] += g;
    };
    return out;
}

TensorPtr matmul(const TensorPtr& a, const TensorPtr& b) {
    require_2d(a, "matmul");
    require_2d(b, "matmul");
    const int m = a->shape[0], k = a->shape[1], k2 = b->shape[0], n = b->shape[1];
    if (k != k2)
        throw DimensionError("matmul: inner dimensions disagree, " + shape_str(a->shape) + " * " + shape_str(b->shape));
    auto out = make_op({m, n}, {a, b});
    const double* A = a->data.data();
    const double* B = b->data.data();
    double* C = out->data.data();
    for (int i = 0; i < m; ++i)
        kernels::linear_row(A + static_cast<std::size_t>(i) * k, B, nullptr, k, n, C + static_cast<std::size_t>(i) * n);
    Tensor* self = out.get();
    TensorPtr pa = a, pb = b;
    out->backward_fn = [self, pa, pb, m, k, n] {
        const double* A = pa->data.data();
        const double* B = pb->data.data();
        const double* G = self->grad.data();
        if (pa->requires_grad) {
            pa->ensure_grad();
            // dA = G * B^T
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < k; ++j) {
                    double s = 0.0;
                    for (int t = 0; t < n; ++t)
                        s += G[static_cast<std::size_t>(i) * n + t] * B[static_cast<std::size_t>(j) * n + t];
                    pa->grad[static_cast<std::size_t>(i) * k + j] += s;
                }
        }
        if (pb->requires_grad) {
            pb->ensure_grad();
            // dB = A^T * G
            for (int i = 0; i < k; ++i)
                for (int j = 0; j < n; ++j) {
                    double s = 0.0;
                    for (int t = 0; t < m; ++t)
                        s += A[static_cast<std::size_t>(t) * k + i] * G[static_cast<std::size_t>(t) * n + j];
                    pb->grad[static_cast<std::size_t>(i) * n + j] += s;
                }
        }
    };
    return out;
}

TensorPtr linear(const TensorPtr& x, const TensorPtr& w, const TensorPtr& b) {
    require_2d(x, "linear");
    require_2d(w, "linear");
    const int T = x->shape[0], d_in = x->shape[1], d_out = w->shape[1];
    if (w->shape[0] != d_in)
        throw DimensionError("linear: weight rows " + std::to_string(w->shape[0]) + " do not match input dim " +
                             std::to_string(d_in));
    if (b && b->numel() != d_out) throw DimensionError("linear: bias size does not match output dim");
    std::vector<TensorPtr> parents = {x, w};
    if (b) parents.push_back(b);
    auto out = make_op({T, d_out}, std::move(parents));
    for (int t = 0; t < T; ++t)
        kernels::linear_row(x->data.data() + static_cast<std::size_t>(t) * d_in, w->data.data(),
                            b ? b->data.data() : nullptr, d_in, d_out,
                            out->data.data() + static_cast<std::size_t>(t) * d_out);
    Tensor* self = out.get();
    TensorPtr px = x, pw = w, pb = b;
    out->backward_fn = [self, px, pw, pb, T, d_in, d_out] {
        const double* G = self->grad.data();
        const double* X = px->data.data();
        const double* W = pw->data.data();
        if (px->requires_grad) {
            px->ensure_grad();
            for (int t = 0; t < T; ++t) {
                const double* grow = G + static_cast<std::size_t>(t) * d_out;
                double* xg = px->grad.data() + static_cast<std::size_t>(t) * d_in;
                for (int i = 0; i < d_in; ++i) {
                    double s = 0.0;
                    const double* wrow = W + static_cast<std::size_t>(i) * d_out;
                    for (int j = 0; j < d_out; ++j) s += grow[j] * wrow[j];
                    xg[i] += s;
                }
            }
        }
        if (pw->requires_grad) {
            pw->ensure_grad();
            for (int t = 0; t < T; ++t) {
                const double* xrow = X + static_cast<std::size_t>(t) * d_in;
                const double* grow = G + static_cast<std::size_t>(t) * d_out;
                for (int i = 0; i < d_in; ++i) {
                    double* wg = pw->grad.data() + static_cast<std::size_t>(i) * d_out;
                    const double xv = xrow[i];
                    for (int j = 0; j < d_out; ++j) wg[j] += xv * grow[j];
                }
            }
        }
        if (pb && pb->requires_grad) {
            pb->ensure_grad();
            for (int t = 0; t < T; ++t) {
                const double* grow = G + static_cast<std::size_t>(t) * d_out;
                for (int j = 0; j < d_out; ++j) pb->grad[j] += grow[j];
            }
        }
    };
    return out;
}

TensorPtr softmax(const TensorPtr& x, int axis) {
    if (x->ndim() < 1 || x->ndim() > 2) throw DimensionError("softmax: expected 1-D or 2-D tensor");
    if (axis < 0 || axis >= x->ndim())
        throw ParameterError("softmax: axis " + std::to_string(axis) + " invalid for " + shape_str(x->shape));
    const bool rows_along = (x->ndim() == 1) || (axis == 1);
    const int n_vec = rows_along ? (x->ndim() == 1 ? 1 : x->shape[0]) : x->shape[1];
    const int len = rows_along ? x->shape[axis] : x->shape[0];
    const int stride = rows_along ? 1 : x->shape[1];
    const int base_stride = rows_along ? len : 1;

    auto out = make_op(x->shape, {x});
    std::vector<double> buf(static_cast<std::size_t>(len));
    for (int v = 0; v < n_vec; ++v) {
        const double* src = x->data.data() + static_cast<std::size_t>(v) * base_stride;
        double* dst = out->data.data() + static_cast<std::size_t>(v) * base_stride;
        if (stride == 1) {
            kernels::softmax_row(src, len, dst);
        } else {
            for (int i = 0; i < len; ++i) buf[i] = src[static_cast<std::size_t>(i) * stride];
            kernels::softmax_row(buf.data(), len, buf.data());
            for (int i = 0; i < len; ++i) dst[static_cast<std::size_t>(i) * stride] = buf[i];
        }
    }
    Tensor* self = out.get();
    TensorPtr px = x;
    out->backward_fn = [self, px, n_vec, len, stride, base_stride] {
        if (!px->requires_grad) return;
        px->ensure_grad();
        for (int v = 0; v < n_vec; ++v) {
            const double* s = self->data.data() + static_cast<std::size_t>(v) * base_stride;
            const double* g = self->grad.data() + static_cast<std::size_t>(v) * base_stride;
            double* xg = px->grad.data() + static_cast<std::size_t>(v) * base_stride;
            double dot = 0.0;
            for (int i = 0; i < len; ++i)
                dot += g[static_cast<std::size_t>(i) * stride] * s[static_cast<std::size_t>(i) * stride];
            for (int i = 0; i < len; ++i) {
                const std::size_t idx = static_cast<std::size_t>(i) * stride;
                xg[idx] += s[idx] * (g[idx] - dot);
            }
        }
    };
    return out;
}

TensorPtr causal_dilated_conv1d(const TensorPtr& x, const TensorPtr& w, const TensorPtr& b, int dilation) {
    require_2d(x, "causal_dilated_conv1d");
    if (dilation < 1) throw ParameterError("causal_dilated_conv1d: dilation must be >= 1, got " + std::to_string(dilation));
    if (w->ndim() != 3) throw DimensionError("causal_dilated_conv1d: kernel must be [k x d_in x d_out]");
    const int T = x->shape[0], d_in = x->shape[1];
    const int k = w->shape[0], d_out = w->shape[2];
    if (w->shape[1] != d_in)
        throw DimensionError("causal_dilated_conv1d: kernel d_in " + std::to_string(w->shape[1]) +
                             " does not match input dim " + std::to_string(d_in));
    if (b && b->numel() != d_out) throw DimensionError("causal_dilated_conv1d: bias size does not match d_out");
    std::vector<TensorPtr> parents = {x, w};
    if (b) parents.push_back(b);
    auto out = make_op({T, d_out}, std::move(parents));
    for (int t = 0; t < T; ++t)
        kernels::conv_row(x->data.data(), d_in, w->data.data(), b ? b->data.data() : nullptr, k, dilation, d_out, t,
                          out->data.data() + static_cast<std::size_t>(t) * d_out);
    Tensor* self = out.get();
    TensorPtr px = x, pw = w, pb = b;
    out->backward_fn = [self, px, pw, pb, T, d_in, k, dilation, d_out] {
        const double* G = self->grad.data();
        const double* X = px->data.data();
        const double* W = pw->data.data();
        for (int t = 0; t < T; ++t) {
            const double* grow = G + static_cast<std::size_t>(t) * d_out;
            for (int tap = 0; tap < k; ++tap) {
                const int tt = t - (k - 1 - tap) * dilation;
                if (tt < 0) continue;
                const double* wtap = W + static_cast<std::size_t>(tap) * d_in * d_out;
                const double* xrow = X + static_cast<std::size_t>(tt) * d_in;
                if (px->requires_grad) {
                    px->ensure_grad();
                    double* xg = px->grad.data() + static_cast<std::size_t>(tt) * d_in;
                    for (int i = 0; i < d_in; ++i) {
                        double s = 0.0;
                        const double* wrow = wtap + static_cast<std::size_t>(i) * d_out;
                        for (int j = 0; j < d_out; ++j) s += grow[j] * wrow[j];
                        xg[i] += s;
                    }
                }
                if (pw->requires_grad) {
                    pw->ensure_grad();
                    double* wg = pw->grad.data() + static_cast<std::size_t>(tap) * d_in * d_out;
                    for (int i = 0; i < d_in; ++i) {
                        const double xv = xrow[i];
                        double* wgrow = wg + static_cast<std::size_t>(i) * d_out;
                        for (int j = 0; j < d_out; ++j) wgrow[j] += xv * grow[j];
                    }
                }
            }
            if (pb && pb->requires_grad) {
                pb->ensure_grad();
                for (int j = 0; j < d_out; ++j) pb->grad[j] += grow[j];
            }
        }
    };
    return out;
}

TensorPtr windowed_causal_attention(const TensorPtr& q, const TensorPtr& k, const TensorPtr& v, int window) {
    require_2d(q, "windowed_causal_attention");
    if (window < 1) throw ParameterError("windowed_causal_attention: window must be >= 1");
    if (q->shape != k->shape || q->shape != v->shape)
        throw DimensionError("windowed_causal_attention: q/k/v shapes must match");
    const int T = q->shape[0], d = q->shape[1];
    const double att_scale = 1.0 / std::sqrt(static_cast<double>(d));
    auto out = make_op({T, d}, {q, k, v});
    std::vector<double> weights(static_cast<std::size_t>(2 * window));
    for (int t = 0; t < T; ++t) {
        int ks, ke;
        kernels::attention_span(t, window, &ks, &ke);
        kernels::attention_row(q->data.data() + static_cast<std::size_t>(t) * d, k->data.data(), v->data.data(), d, ks,
                               ke, att_scale, weights.data(), out->data.data() + static_cast<std::size_t>(t) * d);
    }
    Tensor* self = out.get();
    TensorPtr pq = q, pk = k, pv = v;
    out->backward_fn = [self, pq, pk, pv, T, d, window, att_scale] {
        pq->ensure_grad();
        pk->ensure_grad();
        pv->ensure_grad();
        std::vector<double> a(static_cast<std::size_t>(2 * window));
        std::vector<double> ds(static_cast<std::size_t>(2 * window));
        std::vector<double> ctx_unused(static_cast<std::size_t>(d));
        const double* Q = pq->data.data();
        const double* K = pk->data.data();
        const double* V = pv->data.data();
        for (int t = 0; t < T; ++t) {
            int ks, ke;
            kernels::attention_span(t, window, &ks, &ke);
            const int n = ke - ks;
            const double* qrow = Q + static_cast<std::size_t>(t) * d;
            // recompute softmax weights for this query
            kernels::attention_row(qrow, K, V, d, ks, ke, att_scale, a.data(), ctx_unused.data());
            const double* grow = self->grad.data() + static_cast<std::size_t>(t) * d;
            // dL/da_m = g . v_m ; softmax backward -> dL/ds_m
            double dot_ga = 0.0;
            for (int m = 0; m < n; ++m) {
                ds[m] = kernels::dot(grow, V + static_cast<std::size_t>(ks + m) * d, d);
                dot_ga += ds[m] * a[m];
            }
            for (int m = 0; m < n; ++m) ds[m] = a[m] * (ds[m] - dot_ga);
            double* qg = pq->grad.data() + static_cast<std::size_t>(t) * d;
            for (int m = 0; m < n; ++m) {
                const double w_s = att_scale * ds[m];
                const double* krow = K + static_cast<std::size_t>(ks + m) * d;
                double* kg = pk->grad.data() + static_cast<std::size_t>(ks + m) * d;
                double* vg = pv->grad.data() + static_cast<std::size_t>(ks + m) * d;
                const double am = a[m];
                for (int j = 0; j < d; ++j) {
                    qg[j] += w_s * krow[j];
                    kg[j] += w_s * qrow[j];
                    vg[j] += am * grow[j];
                }
            }
        }
    };
    return out;
}

TensorPtr cross_entropy_mean(const TensorPtr& logits, const std::vector<int>& labels) {
    require_2d(logits, "cross_entropy_mean");
    const int T = logits->shape[0], C = logits->shape[1];
    if (static_cast<int>(labels.size()) != T)
        throw DataError("cross_entropy_mean: " + std::to_string(labels.size()) + " labels for " + std::to_string(T) +
                        " frames");
    for (int t = 0; t < T; ++t)
        if (labels[t] < 0 || labels[t] >= C)
            throw DataError("cross_entropy_mean: label " + std::to_string(labels[t]) + " at frame " +
                            std::to_string(t) + " outside [0, " + std::to_string(C) + ")");
    auto out = make_op({1}, {logits});
    std::vector<double> ls(static_cast<std::size_t>(C));
    double total = 0.0;
    for (int t = 0; t < T; ++t) {
        kernels::log_softmax_row(logits->data.data() + static_cast<std::size_t>(t) * C, C, ls.data());
        total -= ls[labels[t]];
    }
    out->data[0] = total / T;
    Tensor* self = out.get();
    TensorPtr pl = logits;
    std::vector<int> y = labels;
    out->backward_fn = [self, pl, y, T, C] {
        if (!pl->requires_grad) return;
        pl->ensure_grad();
        const double g = self->grad[0] / T;
        std::vector<double> p(static_cast<std::size_t>(C));
        for (int t = 0; t < T; ++t) {
            kernels::softmax_row(pl->data.data() + static_cast<std::size_t>(t) * C, C, p.data());
            double* lg = pl->grad.data() + static_cast<std::size_t>(t) * C;
            for (int c = 0; c < C; ++c) lg[c] += g * (p[c] - (c == y[t] ? 1.0 : 0.0));
        }
    };
    return out;
}

TensorPtr smoothing_loss_op(const TensorPtr& logits, double clamp_hi, bool stop_prev) {
    require_2d(logits, "smoothing_loss");
    const int T = logits->shape[0], C = logits->shape[1];
    if (T < 2) return Tensor::scalar(0.0);
    auto out = make_op({1}, {logits});
    std::vector<double> ls(static_cast<std::size_t>(T) * C);
    for (int t = 0; t < T; ++t)
        kernels::log_softmax_row(logits->data.data() + static_cast<std::size_t>(t) * C, C,
                                 ls.data() + static_cast<std::size_t>(t) * C);
    double total = 0.0;
    for (int t = 1; t < T; ++t)
        for (int c = 0; c < C; ++c) {
            const double diff = ls[static_cast<std::size_t>(t) * C + c] - ls[static_cast<std::size_t>(t - 1) * C + c];
            const double sq = diff * diff;
            total += sq > clamp_hi ? clamp_hi : sq;
        }
    out->data[0] = total / (static_cast<double>(T) * C);
    Tensor* self = out.get();
    TensorPtr pl = logits;
    out->backward_fn = [self, pl, T, C, clamp_hi, stop_prev] {
        if (!pl->requires_grad) return;
        pl->ensure_grad();
        const double g = self->grad[0] / (static_cast<double>(T) * C);
        std::vector<double> ls(static_cast<std::size_t>(T) * C);
        for (int t = 0; t < T; ++t)
            kernels::log_softmax_row(pl->data.data() + static_cast<std::size_t>(t) * C, C,
                                     ls.data() + static_cast<std::size_t>(t) * C);
        // d(total)/d(ls): clamp kills the gradient where diff^2 exceeds the bound
        std::vector<double> dls(static_cast<std::size_t>(T) * C, 0.0);
        for (int t = 1; t < T; ++t)
            for (int c = 0; c < C; ++c) {
                const double diff =
                    ls[static_cast<std::size_t>(t) * C + c] - ls[static_cast<std::size_t>(t - 1) * C + c];
                if (diff * diff >= clamp_hi) continue;
                dls[static_cast<std::size_t>(t) * C + c] += 2.0 * diff;
                if (!stop_prev) dls[static_cast<std::size_t>(t - 1) * C + c] -= 2.0 * diff;
            }
        // log-softmax backward per frame: dx_c = dls_c - softmax_c * sum(dls)
        std::vector<double> p(static_cast<std::size_t>(C));
        for (int t = 0; t < T; ++t) {
            const double* drow = dls.data() + static_cast<std::size_t>(t) * C;
            double rowsum = 0.0;
            for (int c = 0; c < C; ++c) rowsum += drow[c];
            kernels::softmax_row(pl->data.data() + static_cast<std::size_t>(t) * C, C, p.data());
            double* lg = pl->grad.data() + static_cast<std::size_t>(t) * C;
            for (int c = 0; c < C; ++c) lg[c] += g * (drow[c] - p[c] * rowsum);
        }
    };
    return out;
}

}  // namespace phaseseg
