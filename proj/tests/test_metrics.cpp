#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "stsr/metrics.hpp"
#include "stsr/rng.hpp"

using namespace stsr;

namespace {

// O(n^2) reference tau-b: concordant/discordant pair counting with tie
// corrections, written independently of the library implementation.
double taub_oracle(const std::vector<double>& a, const std::vector<double>& b) {
    const std::size_t n = a.size();
    long long concordant = 0, discordant = 0, tied_pairs_a = 0, tied_pairs_b = 0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double da = a[i] - a[j], db = b[i] - b[j];
            if (a[i] == a[j]) ++tied_pairs_a;
            if (b[i] == b[j]) ++tied_pairs_b;
            if (da * db > 0.0) ++concordant;
            if (da * db < 0.0) ++discordant;
        }
    const double n0 = static_cast<double>(n) * (n - 1) / 2.0;
    const double denom = std::sqrt((n0 - tied_pairs_a) * (n0 - tied_pairs_b));
    if (denom == 0.0) return 0.0;
    return static_cast<double>(concordant - discordant) / denom;
}

double pearson_oracle(const std::vector<double>& a, const std::vector<double>& b) {
    const std::size_t n = a.size();
    double ma = 0, mb = 0;
    for (std::size_t i = 0; i < n; ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double num = 0, va = 0, vb = 0;
    for (std::size_t i = 0; i < n; ++i) {
        num += (a[i] - ma) * (b[i] - mb);
        va += (a[i] - ma) * (a[i] - ma);
        vb += (b[i] - mb) * (b[i] - mb);
    }
    return num / std::sqrt(va * vb);
}

// O(n^2) fractional ranks.
std::vector<double> ranks_oracle(const std::vector<double>& v) {
    const std::size_t n = v.size();
    std::vector<double> r(n);
    for (std::size_t i = 0; i < n; ++i) {
        double less = 0, equal = 0;
        for (std::size_t j = 0; j < n; ++j) {
            if (v[j] < v[i]) ++less;
            if (v[j] == v[i]) ++equal;
        }
        r[i] = less + (equal + 1.0) / 2.0;
    }
    return r;
}

}  // namespace

TEST_CASE("average_ranks with ties") {
    auto r = average_ranks({10.0, 20.0, 20.0, 5.0});
    CHECK(r[0] == doctest::Approx(2.0));
    CHECK(r[1] == doctest::Approx(3.5));
    CHECK(r[2] == doctest::Approx(3.5));
    CHECK(r[3] == doctest::Approx(1.0));
}

TEST_CASE("rank oracle agreement on random data with ties") {
    Rng rng(51);
    for (int rep = 0; rep < 20; ++rep) {
        std::vector<double> v(40);
        for (double& x : v) x = std::floor(rng.uniform(0.0, 10.0));  // force ties
        auto lib = average_ranks(v);
        auto ref = ranks_oracle(v);
        for (std::size_t i = 0; i < v.size(); ++i) CHECK(lib[i] == doctest::Approx(ref[i]));
    }
}

TEST_CASE("plcc matches a hand-checkable case and the oracle") {
    std::vector<double> a{1, 2, 3, 4}, b{2, 4, 6, 8};
    CHECK(plcc(a, b) == doctest::Approx(1.0));
    std::vector<double> c{4, 3, 2, 1};
    CHECK(plcc(a, c) == doctest::Approx(-1.0));

    Rng rng(52);
    for (int rep = 0; rep < 50; ++rep) {
        std::vector<double> x(30), y(30);
        for (std::size_t i = 0; i < 30; ++i) {
            x[i] = rng.normal();
            y[i] = 0.5 * x[i] + rng.normal();
        }
        CHECK(plcc(x, y) == doctest::Approx(pearson_oracle(x, y)).epsilon(1e-12));
    }
}

TEST_CASE("srcc equals Pearson of oracle ranks, with tie handling") {
    Rng rng(53);
    for (int rep = 0; rep < 50; ++rep) {
        std::vector<double> x(25), y(25);
        for (std::size_t i = 0; i < 25; ++i) {
            x[i] = std::floor(rng.uniform(0.0, 8.0));
            y[i] = std::floor(rng.uniform(0.0, 8.0));
        }
        if (x == y) continue;
        const double expected = pearson_oracle(ranks_oracle(x), ranks_oracle(y));
        CHECK(srcc(x, y) == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("srcc is invariant to strictly monotone maps") {
    Rng rng(54);
    std::vector<double> x(40), y(40);
    for (std::size_t i = 0; i < 40; ++i) {
        x[i] = rng.normal();
        y[i] = rng.normal();
    }
    std::vector<double> x3 = x;
    for (double& v : x3) v = v * v * v;
    CHECK(srcc(x, y) == doctest::Approx(srcc(x3, y)).epsilon(1e-12));
}

TEST_CASE("correlation degenerate-input rules") {
    std::vector<double> same{3, 3, 3}, other{1, 2, 3};
    CHECK(srcc(same, same) == 1.0);
    CHECK(srcc(other, other) == 1.0);
    CHECK(srcc(same, other) == 0.0);
    CHECK(plcc(same, other) == 0.0);
    CHECK(krcc(same, other) == 0.0);
    CHECK(krcc(other, other) == 1.0);
}

TEST_CASE("krcc matches the pair-counting oracle") {
    std::vector<double> a{1, 2, 3, 4, 5}, b{5, 4, 3, 2, 1};
    CHECK(krcc(a, b) == doctest::Approx(-1.0));
    CHECK(krcc(a, a) == doctest::Approx(1.0));

    Rng rng(55);
    for (int rep = 0; rep < 50; ++rep) {
        std::vector<double> x(20), y(20);
        for (std::size_t i = 0; i < 20; ++i) {
            x[i] = std::floor(rng.uniform(0.0, 6.0));
            y[i] = std::floor(rng.uniform(0.0, 6.0));
        }
        if (x == y) continue;
        CHECK(krcc(x, y) == doctest::Approx(taub_oracle(x, y)).epsilon(1e-12));
    }
}

TEST_CASE("logistic_fit recovers a logistic relationship") {
    std::vector<double> s, mos;
    const double b1 = 9.0, b2 = 1.0, b3 = 0.5, b4 = 0.2;
    for (double x = -1.0; x <= 2.0; x += 0.05) {
        s.push_back(x);
        mos.push_back((b1 - b2) / (1.0 + std::exp(-(x - b3) / b4)) + b2);
    }
    auto fit = logistic_fit(s, mos);
    CHECK(fit.rmse < 0.05);
    CHECK(fit.mapped.size() == s.size());
    // mapped predictions track the targets closely
    for (std::size_t i = 0; i < s.size(); ++i) CHECK(std::fabs(fit.mapped[i] - mos[i]) < 0.2);
}

TEST_CASE("logistic_fit falls back to affine on linear data") {
    std::vector<double> s, mos;
    for (double x = 0.0; x < 3.0; x += 0.1) {
        s.push_back(x);
        mos.push_back(2.0 * x + 1.0);
    }
    auto fit = logistic_fit(s, mos);
    CHECK(fit.rmse < 0.05);
}

TEST_CASE("outlier_ratio with explicit per-item deviations") {
    std::vector<double> resid{0.1, 5.0, -0.2, -6.0};
    std::vector<double> mos_std{1.0, 1.0, 1.0, 1.0};
    CHECK(outlier_ratio(resid, &mos_std) == doctest::Approx(0.5));
    std::vector<double> wide{10.0, 10.0, 10.0, 10.0};
    CHECK(outlier_ratio(resid, &wide) == doctest::Approx(0.0));
}

TEST_CASE("significance on published-scale inputs") {
    CHECK(significance(0.908, 0.888, 450, 450) == 0);
    CHECK(significance(0.99, 0.3, 500, 500) == 1);
    CHECK(significance(0.3, 0.99, 500, 500) == -1);
    CHECK_THROWS(significance(0.5, 0.5, 3, 100));
    CHECK_THROWS(significance(1.0, 0.5, 100, 100));
}

TEST_CASE("accuracy and per-level accuracy") {
    std::vector<std::size_t> preds{0, 1, 2, 2}, labels{0, 1, 1, 2};
    CHECK(accuracy(preds, labels) == doctest::Approx(0.75));

    std::vector<int> levels{1, 1, 2, 2};
    auto by_level = per_level_accuracy(preds, labels, levels);
    REQUIRE(by_level.size() == 2);
    CHECK(by_level[0].level == 1);
    CHECK(by_level[0].acc == doctest::Approx(1.0));
    CHECK(by_level[0].count == 2);
    CHECK(by_level[1].level == 2);
    CHECK(by_level[1].acc == doctest::Approx(0.5));
}

TEST_CASE("evaluate_iqa report fields are internally consistent") {
    Rng rng(56);
    std::vector<double> pred(60), mos(60);
    for (std::size_t i = 0; i < 60; ++i) {
        pred[i] = rng.uniform(0.0, 1.0);
        mos[i] = 1.0 + 8.0 * pred[i] + 0.3 * rng.normal();
    }
    auto rep = evaluate_iqa(pred, mos);
    CHECK(rep.n == 60);
    CHECK(rep.srcc == doctest::Approx(srcc(pred, mos)));
    CHECK(rep.krcc == doctest::Approx(krcc(pred, mos)));
    CHECK(rep.srcc > 0.9);
    CHECK(rep.plcc > 0.9);
    CHECK(rep.rmse >= 0.0);
    CHECK(rep.or_ >= 0.0);
    CHECK(rep.or_ <= 1.0);
}
