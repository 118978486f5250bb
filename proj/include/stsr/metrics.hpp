#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <vector>

namespace stsr {

// Average ranks with ties averaged (fractional ranks).
std::vector<double> average_ranks(const std::vector<double>& v);

// Pearson, Spearman (ranked Pearson) and Kendall tau-b. Degenerate inputs
// follow the totalization rule used by the scorers: equal vectors give 1,
// a single constant side gives 0.
double plcc(const std::vector<double>& a, const std::vector<double>& b);
double srcc(const std::vector<double>& a, const std::vector<double>& b);
double krcc(const std::vector<double>& a, const std::vector<double>& b);

// 4-parameter logistic q(s) = (b1-b2)/(1+exp(-(s-b3)/|b4|)) + b2 fitted by
// Nelder-Mead on squared error. Falls back to the closed-form affine fit when
// the simplex does not beat it.
struct LogisticFit {
    std::array<double, 4> params{};
    std::vector<double> mapped;
    bool logistic_used = true;
    double rmse = 0.0;
};

LogisticFit logistic_fit(const std::vector<double>& pred, const std::vector<double>& mos,
                         int max_iterations = 2000);

// Fraction of |residual| > 2*mos_std_i, or > 2*sample std of residuals when
// per-item deviations are absent.
double outlier_ratio(const std::vector<double>& residuals,
                     const std::vector<double>* mos_std = nullptr);

// Fisher-z comparison at the 95% level (ITU-T P.1401 style). Returns 0 when
// statistically similar, +1 when r1 beats r2, -1 when r1 loses to r2.
int significance(double r1, double r2, std::size_t n1, std::size_t n2);

double accuracy(const std::vector<std::size_t>& preds, const std::vector<std::size_t>& labels);

// Top-1 accuracy grouped by distortion level.
struct LevelAccuracy {
    int level;
    double acc;
    std::size_t count;
};
std::vector<LevelAccuracy> per_level_accuracy(const std::vector<std::size_t>& preds,
                                              const std::vector<std::size_t>& labels,
                                              const std::vector<int>& levels);

struct MetricReport {
    double or_ = 0.0;
    double rmse = 0.0;
    double plcc = 0.0;
    double srcc = 0.0;
    double krcc = 0.0;
    std::size_t n = 0;
    std::array<double, 4> logistic_params{};
};

// Standard IQA evaluation: logistic mapping before PLCC/RMSE/OR, raw ranks
// for SRCC/KRCC.
MetricReport evaluate_iqa(const std::vector<double>& pred, const std::vector<double>& mos,
                          const std::vector<double>* mos_std = nullptr);

}  // namespace stsr
