#pragma once

#include <cstddef>
#include <vector>

#include "stsr/tensor.hpp"

namespace stsr {

// Final fully connected layer of a classifier. Column i of w_l is the class-i
// filter. Class indices are 0-based everywhere in code; the CLI surface maps
// them to the 1-based convention used in reports.
struct PerceptionHead {
    Tensor w_l;  // d x N
    Tensor b_l;  // N

    std::size_t feat_dim() const { return w_l.rows(); }
    std::size_t n_classes() const { return w_l.cols(); }
    void validate() const;
};

// Per-action gradient feature r_x = [r_1 .. r_N].
struct SurprisalFeature {
    Tensor r;
    std::size_t source_pred = 0;
    bool norm_applied = false;
};

enum class NormKind { ZScore, MinMax };

// For ZScore: mean/std per component (std floored at 1e-8).
// For MinMax: mean holds the minimum, std holds the range (same floor).
struct NormStats {
    Tensor mean;
    Tensor std;
    NormKind kind = NormKind::ZScore;
};

// y = w_l^T z + b_l
Tensor logits(const PerceptionHead& h, const Tensor& z);

// argmax, lowest index wins ties
std::size_t predict(const Tensor& y);

Tensor onehot(std::size_t i, std::size_t n);

// A_d = || a_i - y ||_2^2
double action_dis(const Tensor& y, std::size_t i);

// Gradient of A_d restricted to the class-i filter column:
// r_i = -2 (1 - y_i) z.
Tensor grad_filter(const Tensor& z, const Tensor& y, std::size_t i);

// Full-matrix gradient dA_d/dw_l for action class i (d x N), for the
// flattened-feature ablation path.
Tensor grad_full(const Tensor& z, const Tensor& y, std::size_t i);

// Concatenate per-action gradients in class order. With full_gradient the
// feature is the flattened d*N matrix per action (length N*d*N) instead of
// the column restriction (length N*d).
SurprisalFeature extract_rx(const PerceptionHead& h, const Tensor& z, bool full_gradient = false);

NormStats fit_norm(const std::vector<SurprisalFeature>& features, NormKind kind = NormKind::ZScore);
NormStats fit_norm_matrix(const Tensor& rows, NormKind kind = NormKind::ZScore);
void apply_norm(SurprisalFeature& f, const NormStats& stats);
Tensor apply_norm(const Tensor& r, const NormStats& stats);

}  // namespace stsr
