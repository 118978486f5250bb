#include "stsr/features.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace stsr {

namespace {
constexpr double kStdFloor = 1e-8;
}

void PerceptionHead::validate() const {
    if (w_l.ndim() != 2 || n_classes() < 2)
        throw std::invalid_argument("head: need at least 2 classes");
    if (b_l.size() != n_classes())
        throw std::invalid_argument("head: bias length != number of classes");
    if (!w_l.all_finite() || !b_l.all_finite())
        throw std::invalid_argument("head: non-finite parameters");
}

Tensor logits(const PerceptionHead& h, const Tensor& z) {
    if (z.size() != h.feat_dim())
        throw std::invalid_argument("logits: feature length " + std::to_string(z.size()) +
                                    " != d " + std::to_string(h.feat_dim()));
    const std::size_t d = h.feat_dim(), n = h.n_classes();
    Tensor y = h.b_l;
    for (std::size_t k = 0; k < d; ++k) {
        const double zk = z.data[k];
        const double* row = &h.w_l.data[k * n];
        for (std::size_t i = 0; i < n; ++i) y.data[i] += row[i] * zk;
    }
    return y;
}

std::size_t predict(const Tensor& y) {
    if (y.size() < 2) throw std::invalid_argument("predict: need at least 2 logits");
    std::size_t best = 0;
    for (std::size_t i = 1; i < y.size(); ++i)
        if (y.data[i] > y.data[best]) best = i;
    return best;
}

Tensor onehot(std::size_t i, std::size_t n) {
    if (i >= n) throw std::out_of_range("onehot: class index out of range");
    Tensor a({n});
    a(i) = 1.0;
    return a;
}

double action_dis(const Tensor& y, std::size_t i) {
    if (i >= y.size()) throw std::out_of_range("action_dis: class index out of range");
    double s = 0.0;
    for (std::size_t j = 0; j < y.size(); ++j) {
        const double e = (j == i ? 1.0 : 0.0) - y.data[j];
        s += e * e;
    }
    return s;
}

Tensor grad_filter(const Tensor& z, const Tensor& y, std::size_t i) {
    if (i >= y.size()) throw std::out_of_range("grad_filter: class index out of range");
    return scale(z, -2.0 * (1.0 - y.data[i]));
}

Tensor grad_full(const Tensor& z, const Tensor& y, std::size_t i) {
    if (i >= y.size()) throw std::out_of_range("grad_full: class index out of range");
    const std::size_t d = z.size(), n = y.size();
    Tensor g({d, n});
    for (std::size_t k = 0; k < d; ++k)
        for (std::size_t j = 0; j < n; ++j)
            g(k, j) = 2.0 * (y.data[j] - (j == i ? 1.0 : 0.0)) * z.data[k];
    return g;
}

SurprisalFeature extract_rx(const PerceptionHead& h, const Tensor& z, bool full_gradient) {
    Tensor y = logits(h, z);
    const std::size_t n = h.n_classes();
    const std::size_t block = full_gradient ? h.feat_dim() * n : h.feat_dim();

    SurprisalFeature f;
    f.source_pred = predict(y);
    f.r = Tensor({n * block});
    for (std::size_t i = 0; i < n; ++i) {
        Tensor ri = full_gradient ? grad_full(z, y, i) : grad_filter(z, y, i);
        std::copy(ri.data.begin(), ri.data.end(), f.r.data.begin() + i * block);
    }
    return f;
}

NormStats fit_norm_matrix(const Tensor& rows, NormKind kind) {
    if (rows.ndim() != 2 || rows.rows() < 2)
        throw std::invalid_argument("fit_norm: need at least 2 features");
    const std::size_t m = rows.rows(), w = rows.cols();
    NormStats s;
    s.kind = kind;
    s.mean = Tensor({w});
    s.std = Tensor({w});
    if (kind == NormKind::ZScore) {
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < w; ++j) s.mean(j) += rows(i, j);
        for (double& v : s.mean.data) v /= static_cast<double>(m);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < w; ++j) {
                const double d = rows(i, j) - s.mean(j);
                s.std(j) += d * d;
            }
        for (double& v : s.std.data)
            v = std::max(std::sqrt(v / static_cast<double>(m)), kStdFloor);
    } else {
        for (std::size_t j = 0; j < w; ++j) {
            double lo = rows(0, j), hi = rows(0, j);
            for (std::size_t i = 1; i < m; ++i) {
                lo = std::min(lo, rows(i, j));
                hi = std::max(hi, rows(i, j));
            }
            s.mean(j) = lo;
            s.std(j) = std::max(hi - lo, kStdFloor);
        }
    }
    return s;
}

NormStats fit_norm(const std::vector<SurprisalFeature>& features, NormKind kind) {
    if (features.size() < 2) throw std::invalid_argument("fit_norm: need at least 2 features");
    const std::size_t w = features.front().r.size();
    Tensor rows({features.size(), w});
    for (std::size_t i = 0; i < features.size(); ++i) {
        if (features[i].r.size() != w)
            throw std::invalid_argument("fit_norm: inconsistent feature widths");
        std::copy(features[i].r.data.begin(), features[i].r.data.end(), &rows.data[i * w]);
    }
    return fit_norm_matrix(rows, kind);
}

Tensor apply_norm(const Tensor& r, const NormStats& stats) {
    if (r.size() != stats.mean.size())
        throw std::invalid_argument("apply_norm: feature width " + std::to_string(r.size()) +
                                    " != stats width " + std::to_string(stats.mean.size()));
    Tensor out = r;
    for (std::size_t j = 0; j < out.size(); ++j)
        out.data[j] = (out.data[j] - stats.mean(j)) / stats.std(j);
    return out;
}

void apply_norm(SurprisalFeature& f, const NormStats& stats) {
    f.r = apply_norm(f.r, stats);
    f.norm_applied = true;
}

}  // namespace stsr
