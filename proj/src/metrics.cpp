#include "stsr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace stsr {

namespace {

bool is_constant(const std::vector<double>& v) {
    for (double x : v)
        if (x != v.front()) return false;
    return true;
}

double mean_of(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

void require_pair(const std::vector<double>& a, const std::vector<double>& b, std::size_t min_n) {
    if (a.size() != b.size()) throw std::invalid_argument("correlation: length mismatch");
    if (a.size() < min_n) throw std::invalid_argument("correlation: too few samples");
}

// Returns true and sets out when a degenerate case is totalized.
bool totalize(const std::vector<double>& a, const std::vector<double>& b, double& out) {
    if (a == b) {
        out = 1.0;
        return true;
    }
    const bool ca = is_constant(a), cb = is_constant(b);
    if (ca && cb) {
        out = 1.0;
        return true;
    }
    if (ca || cb) {
        out = 0.0;
        return true;
    }
    return false;
}

}  // namespace

std::vector<double> average_ranks(const std::vector<double>& v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
        const double r = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
        i = j + 1;
    }
    return ranks;
}

double plcc(const std::vector<double>& a, const std::vector<double>& b) {
    require_pair(a, b, 2);
    double out;
    if (totalize(a, b, out)) return out;
    const double ma = mean_of(a), mb = mean_of(b);
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double da = a[i] - ma, db = b[i] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    return sab / std::sqrt(saa * sbb);
}

double srcc(const std::vector<double>& a, const std::vector<double>& b) {
    require_pair(a, b, 2);
    double out;
    if (totalize(a, b, out)) return out;
    return plcc(average_ranks(a), average_ranks(b));
}

double krcc(const std::vector<double>& a, const std::vector<double>& b) {
    require_pair(a, b, 2);
    double out;
    if (totalize(a, b, out)) return out;
    const std::size_t n = a.size();
    double concordant = 0.0, discordant = 0.0, ties_a = 0.0, ties_b = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double da = a[i] - a[j], db = b[i] - b[j];
            if (da == 0.0 && db == 0.0) continue;
            if (da == 0.0)
                ++ties_a;
            else if (db == 0.0)
                ++ties_b;
            else if (da * db > 0.0)
                ++concordant;
            else
                ++discordant;
        }
    }
    const double denom =
        std::sqrt((concordant + discordant + ties_a) * (concordant + discordant + ties_b));
    if (denom == 0.0) return 0.0;
    return (concordant - discordant) / denom;
}

namespace {

double logistic4(const std::array<double, 4>& p, double s) {
    return (p[0] - p[1]) / (1.0 + std::exp(-(s - p[2]) / std::fabs(p[3]))) + p[1];
}

double sse(const std::array<double, 4>& p, const std::vector<double>& pred,
           const std::vector<double>& mos) {
    double s = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double e = logistic4(p, pred[i]) - mos[i];
        s += e * e;
    }
    return std::isfinite(s) ? s : 1e300;
}

// Least-squares affine map pred -> mos.
void affine_fit(const std::vector<double>& pred, const std::vector<double>& mos, double& slope,
                double& intercept) {
    const double mp = mean_of(pred), mm = mean_of(mos);
    double spp = 0.0, spm = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        spp += (pred[i] - mp) * (pred[i] - mp);
        spm += (pred[i] - mp) * (mos[i] - mm);
    }
    slope = spp > 0.0 ? spm / spp : 0.0;
    intercept = mm - slope * mp;
}

std::array<double, 4> nelder_mead(std::array<double, 4> start, const std::vector<double>& pred,
                                  const std::vector<double>& mos, int max_iterations) {
    constexpr std::size_t dim = 4;
    std::array<std::array<double, 4>, dim + 1> simplex;
    std::array<double, dim + 1> f;
    simplex[0] = start;
    for (std::size_t i = 0; i < dim; ++i) {
        simplex[i + 1] = start;
        const double step = start[i] != 0.0 ? 0.1 * std::fabs(start[i]) : 0.1;
        simplex[i + 1][i] += step;
    }
    for (std::size_t i = 0; i <= dim; ++i) f[i] = sse(simplex[i], pred, mos);

    for (int it = 0; it < max_iterations; ++it) {
        std::array<std::size_t, dim + 1> ord;
        std::iota(ord.begin(), ord.end(), 0);
        std::sort(ord.begin(), ord.end(), [&](std::size_t a, std::size_t b) { return f[a] < f[b]; });
        const std::size_t best = ord[0], worst = ord[dim], second_worst = ord[dim - 1];
        if (f[worst] - f[best] < 1e-14 * (1.0 + std::fabs(f[best]))) break;

        std::array<double, 4> centroid{};
        for (std::size_t i = 0; i <= dim; ++i) {
            if (i == worst) continue;
            for (std::size_t k = 0; k < dim; ++k) centroid[k] += simplex[i][k] / dim;
        }
        auto blend = [&](double t) {
            std::array<double, 4> p;
            for (std::size_t k = 0; k < dim; ++k)
                p[k] = centroid[k] + t * (simplex[worst][k] - centroid[k]);
            return p;
        };

        auto reflect = blend(-1.0);
        const double fr = sse(reflect, pred, mos);
        if (fr < f[best]) {
            auto expand = blend(-2.0);
            const double fe = sse(expand, pred, mos);
            if (fe < fr) {
                simplex[worst] = expand;
                f[worst] = fe;
            } else {
                simplex[worst] = reflect;
                f[worst] = fr;
            }
        } else if (fr < f[second_worst]) {
            simplex[worst] = reflect;
            f[worst] = fr;
        } else {
            auto contract = blend(fr < f[worst] ? -0.5 : 0.5);
            const double fc = sse(contract, pred, mos);
            if (fc < std::min(fr, f[worst])) {
                simplex[worst] = contract;
                f[worst] = fc;
            } else {
                for (std::size_t i = 0; i <= dim; ++i) {
                    if (i == best) continue;
                    for (std::size_t k = 0; k < dim; ++k)
                        simplex[i][k] = simplex[best][k] + 0.5 * (simplex[i][k] - simplex[best][k]);
                    f[i] = sse(simplex[i], pred, mos);
                }
            }
        }
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i <= dim; ++i)
        if (f[i] < f[best]) best = i;
    return simplex[best];
}

}  // namespace

LogisticFit logistic_fit(const std::vector<double>& pred, const std::vector<double>& mos,
                         int max_iterations) {
    if (pred.size() != mos.size()) throw std::invalid_argument("logistic_fit: length mismatch");
    if (pred.size() < 8) throw std::invalid_argument("logistic_fit: need at least 8 samples");
    const std::size_t n = pred.size();

    double slope, intercept;
    affine_fit(pred, mos, slope, intercept);
    double affine_sse = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double e = slope * pred[i] + intercept - mos[i];
        affine_sse += e * e;
    }

    const auto [mmin_it, mmax_it] = std::minmax_element(mos.begin(), mos.end());
    double pstd = 0.0;
    const double pm = mean_of(pred);
    for (double p : pred) pstd += (p - pm) * (p - pm);
    pstd = std::sqrt(pstd / static_cast<double>(n));

    std::array<double, 4> start{slope >= 0.0 ? *mmax_it : *mmin_it,
                                slope >= 0.0 ? *mmin_it : *mmax_it, pm,
                                pstd > 0.0 ? pstd : 1.0};
    std::array<double, 4> p = nelder_mead(start, pred, mos, max_iterations);
    const double logistic_sse = sse(p, pred, mos);

    LogisticFit fit;
    fit.mapped.resize(n);
    if (logistic_sse <= affine_sse) {
        fit.params = p;
        fit.logistic_used = true;
        for (std::size_t i = 0; i < n; ++i) fit.mapped[i] = logistic4(p, pred[i]);
        fit.rmse = std::sqrt(logistic_sse / static_cast<double>(n));
    } else {
        fit.params = {slope, intercept, 0.0, 0.0};
        fit.logistic_used = false;
        for (std::size_t i = 0; i < n; ++i) fit.mapped[i] = slope * pred[i] + intercept;
        fit.rmse = std::sqrt(affine_sse / static_cast<double>(n));
    }
    return fit;
}

double outlier_ratio(const std::vector<double>& residuals, const std::vector<double>* mos_std) {
    if (residuals.empty()) throw std::invalid_argument("outlier_ratio: empty residuals");
    std::size_t outliers = 0;
    if (mos_std) {
        if (mos_std->size() != residuals.size())
            throw std::invalid_argument("outlier_ratio: mos_std length mismatch");
        for (std::size_t i = 0; i < residuals.size(); ++i)
            if (std::fabs(residuals[i]) > 2.0 * (*mos_std)[i]) ++outliers;
    } else {
        const double m = mean_of(residuals);
        double var = 0.0;
        for (double r : residuals) var += (r - m) * (r - m);
        const double sd = std::sqrt(var / static_cast<double>(residuals.size()));
        for (double r : residuals)
            if (std::fabs(r) > 2.0 * sd) ++outliers;
    }
    return static_cast<double>(outliers) / static_cast<double>(residuals.size());
}

int significance(double r1, double r2, std::size_t n1, std::size_t n2) {
    if (n1 <= 3 || n2 <= 3) throw std::invalid_argument("significance: need n > 3");
    if (std::fabs(r1) >= 1.0 || std::fabs(r2) >= 1.0)
        throw std::invalid_argument("significance: |r| must be < 1");
    const double z1 = std::atanh(r1), z2 = std::atanh(r2);
    const double se = std::sqrt(1.0 / static_cast<double>(n1 - 3) + 1.0 / static_cast<double>(n2 - 3));
    const double stat = (z1 - z2) / se;
    if (std::fabs(stat) < 1.96) return 0;
    return stat > 0.0 ? 1 : -1;
}

double accuracy(const std::vector<std::size_t>& preds, const std::vector<std::size_t>& labels) {
    if (preds.size() != labels.size()) throw std::invalid_argument("accuracy: length mismatch");
    if (preds.empty()) throw std::invalid_argument("accuracy: empty input");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < preds.size(); ++i)
        if (preds[i] == labels[i]) ++correct;
    return static_cast<double>(correct) / static_cast<double>(preds.size());
}

std::vector<LevelAccuracy> per_level_accuracy(const std::vector<std::size_t>& preds,
                                              const std::vector<std::size_t>& labels,
                                              const std::vector<int>& levels) {
    if (preds.size() != labels.size() || preds.size() != levels.size())
        throw std::invalid_argument("per_level_accuracy: length mismatch");
    std::vector<int> uniq = levels;
    std::sort(uniq.begin(), uniq.end());
    uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
    std::vector<LevelAccuracy> out;
    for (int lvl : uniq) {
        std::size_t total = 0, correct = 0;
        for (std::size_t i = 0; i < preds.size(); ++i) {
            if (levels[i] != lvl) continue;
            ++total;
            if (preds[i] == labels[i]) ++correct;
        }
        out.push_back({lvl, static_cast<double>(correct) / static_cast<double>(total), total});
    }
    return out;
}

MetricReport evaluate_iqa(const std::vector<double>& pred, const std::vector<double>& mos,
                          const std::vector<double>* mos_std) {
    if (pred.size() < 4) throw std::invalid_argument("evaluate_iqa: need n >= 4");
    MetricReport r;
    r.n = pred.size();
    r.srcc = srcc(pred, mos);
    r.krcc = krcc(pred, mos);
    LogisticFit fit = logistic_fit(pred, mos);
    r.logistic_params = fit.params;
    r.rmse = fit.rmse;
    r.plcc = plcc(fit.mapped, mos);
    std::vector<double> residuals(pred.size());
    for (std::size_t i = 0; i < pred.size(); ++i) residuals[i] = fit.mapped[i] - mos[i];
    r.or_ = outlier_ratio(residuals, mos_std);
    return r;
}

}  // namespace stsr
