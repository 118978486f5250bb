#include "stsr/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace stsr {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
    std::size_t p = 1;
    for (std::size_t d : shape) p *= d;
    return p;
}

std::string shape_to_string(const std::vector<std::size_t>& shape) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << "x";
        os << shape[i];
    }
    os << "]";
    return os.str();
}

Tensor::Tensor(std::vector<std::size_t> s) : shape(std::move(s)), data(shape_product(shape), 0.0) {}

Tensor::Tensor(std::vector<std::size_t> s, std::vector<double> d)
    : shape(std::move(s)), data(std::move(d)) {
    if (shape_product(shape) != data.size())
        throw std::invalid_argument("tensor: shape " + shape_to_string(shape) +
                                    " does not match data length " + std::to_string(data.size()));
}

Tensor Tensor::vector(std::vector<double> d) {
    std::size_t n = d.size();
    return Tensor({n}, std::move(d));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> d) {
    return Tensor({rows, cols}, std::move(d));
}

Tensor Tensor::identity(std::size_t n) {
    Tensor t({n, n});
    for (std::size_t i = 0; i < n; ++i) t(i, i) = 1.0;
    return t;
}

bool Tensor::all_finite() const {
    for (double v : data)
        if (!std::isfinite(v)) return false;
    return true;
}

void require_finite(const Tensor& t, const std::string& what) {
    if (!t.all_finite()) throw std::invalid_argument(what + ": non-finite entries");
}

static void require_matrix(const Tensor& t, const char* name) {
    if (t.ndim() != 2)
        throw std::invalid_argument(std::string(name) + ": expected matrix, got " +
                                    shape_to_string(t.shape));
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    require_matrix(a, "matmul a");
    require_matrix(b, "matmul b");
    if (a.cols() != b.rows())
        throw std::invalid_argument("matmul: inner dims differ, " + shape_to_string(a.shape) +
                                    " vs " + shape_to_string(b.shape));
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    Tensor c({m, n});
    for (std::size_t i = 0; i < m; ++i) {
        double* ci = &c.data[i * n];
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = a.data[i * k + p];
            if (aip == 0.0) continue;
            const double* bp = &b.data[p * n];
            for (std::size_t j = 0; j < n; ++j) ci[j] += aip * bp[j];
        }
    }
    return c;
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
    require_matrix(a, "matmul_nt a");
    require_matrix(b, "matmul_nt b");
    if (a.cols() != b.cols())
        throw std::invalid_argument("matmul_nt: inner dims differ, " + shape_to_string(a.shape) +
                                    " vs " + shape_to_string(b.shape));
    const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
    Tensor c({m, n});
    for (std::size_t i = 0; i < m; ++i) {
        const double* ai = &a.data[i * k];
        for (std::size_t j = 0; j < n; ++j) {
            const double* bj = &b.data[j * k];
            double s = 0.0;
            for (std::size_t p = 0; p < k; ++p) s += ai[p] * bj[p];
            c.data[i * n + j] = s;
        }
    }
    return c;
}

Tensor matmul_tn(const Tensor& a, const Tensor& b) {
    require_matrix(a, "matmul_tn a");
    require_matrix(b, "matmul_tn b");
    if (a.rows() != b.rows())
        throw std::invalid_argument("matmul_tn: inner dims differ, " + shape_to_string(a.shape) +
                                    " vs " + shape_to_string(b.shape));
    const std::size_t k = a.rows(), m = a.cols(), n = b.cols();
    Tensor c({m, n});
    for (std::size_t p = 0; p < k; ++p) {
        const double* ap = &a.data[p * m];
        const double* bp = &b.data[p * n];
        for (std::size_t i = 0; i < m; ++i) {
            const double api = ap[i];
            if (api == 0.0) continue;
            double* ci = &c.data[i * n];
            for (std::size_t j = 0; j < n; ++j) ci[j] += api * bp[j];
        }
    }
    return c;
}

Tensor transpose(const Tensor& a) {
    require_matrix(a, "transpose");
    Tensor t({a.cols(), a.rows()});
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
    return t;
}

static void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (!a.same_shape(b))
        throw std::invalid_argument(std::string(op) + ": shape mismatch " +
                                    shape_to_string(a.shape) + " vs " + shape_to_string(b.shape));
}

Tensor add(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "add");
    Tensor c = a;
    for (std::size_t i = 0; i < c.size(); ++i) c.data[i] += b.data[i];
    return c;
}

Tensor sub(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "sub");
    Tensor c = a;
    for (std::size_t i = 0; i < c.size(); ++i) c.data[i] -= b.data[i];
    return c;
}

Tensor scale(const Tensor& a, double s) {
    Tensor c = a;
    for (double& v : c.data) v *= s;
    return c;
}

void axpy(double alpha, const Tensor& x, Tensor& y) {
    require_same_shape(x, y, "axpy");
    for (std::size_t i = 0; i < y.size(); ++i) y.data[i] += alpha * x.data[i];
}

double dot(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "dot");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a.data[i] * b.data[i];
    return s;
}

double squared_norm(const Tensor& a) {
    double s = 0.0;
    for (double v : a.data) s += v * v;
    return s;
}

double max_abs(const Tensor& a) {
    double m = 0.0;
    for (double v : a.data) m = std::max(m, std::fabs(v));
    return m;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Tensor sigmoid(const Tensor& x) {
    Tensor y = x;
    for (double& v : y.data) v = sigmoid(v);
    return y;
}

double logit(double y, double eps) {
    const double c = std::clamp(y, eps, 1.0 - eps);
    return std::log(c / (1.0 - c));
}

Tensor logit(const Tensor& y, double eps) {
    Tensor x = y;
    for (double& v : x.data) v = logit(v, eps);
    return x;
}

void sym_eig(const Tensor& s, Tensor& eigenvalues, Tensor& eigenvectors) {
    require_matrix(s, "sym_eig");
    const std::size_t n = s.rows();
    if (s.cols() != n) throw std::invalid_argument("sym_eig: matrix not square");
    double scale_ref = std::max(1.0, max_abs(s));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (std::fabs(s(i, j) - s(j, i)) > 1e-9 * scale_ref)
                throw std::invalid_argument("sym_eig: matrix not symmetric within 1e-9");

    Tensor a = s;
    Tensor q = Tensor::identity(n);

    auto offdiag = [&]() {
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) sum += a(i, j) * a(i, j);
        return sum;
    };

    const double tol = 1e-30 * scale_ref * scale_ref * static_cast<double>(n * n) + 1e-300;
    const int max_sweeps = 100;
    for (int sweep = 0; sweep < max_sweeps && offdiag() > tol; ++sweep) {
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t r = p + 1; r < n; ++r) {
                const double apr = a(p, r);
                if (std::fabs(apr) < 1e-300) continue;
                const double theta = (a(r, r) - a(p, p)) / (2.0 * apr);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double sn = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, p), akr = a(k, r);
                    a(k, p) = c * akp - sn * akr;
                    a(k, r) = sn * akp + c * akr;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a(p, k), ark = a(r, k);
                    a(p, k) = c * apk - sn * ark;
                    a(r, k) = sn * apk + c * ark;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double qkp = q(k, p), qkr = q(k, r);
                    q(k, p) = c * qkp - sn * qkr;
                    q(k, r) = sn * qkp + c * qkr;
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });

    eigenvalues = Tensor({n});
    eigenvectors = Tensor({n, n});
    for (std::size_t j = 0; j < n; ++j) {
        eigenvalues(j) = a(order[j], order[j]);
        for (std::size_t i = 0; i < n; ++i) eigenvectors(i, j) = q(i, order[j]);
    }
}

}  // namespace stsr
