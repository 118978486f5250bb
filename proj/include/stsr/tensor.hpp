#pragma once

#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

namespace stsr {

// Dense row-major tensor of doubles. Shapes are explicit; there is no
// broadcasting. Everything heavier (f32 storage, compression) lives at the
// serialization boundary, not here.
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> s);
    Tensor(std::vector<std::size_t> s, std::vector<double> d);

    static Tensor zeros(std::vector<std::size_t> s) { return Tensor(std::move(s)); }
    static Tensor vector(std::vector<double> d);
    static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> d);
    static Tensor identity(std::size_t n);

    std::size_t size() const { return data.size(); }
    std::size_t ndim() const { return shape.size(); }
    std::size_t rows() const { return shape.at(0); }
    std::size_t cols() const { return shape.at(1); }

    double& operator()(std::size_t i) { return data[i]; }
    double operator()(std::size_t i) const { return data[i]; }
    double& operator()(std::size_t i, std::size_t j) { return data[i * shape[1] + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * shape[1] + j]; }
    double& operator()(std::size_t i, std::size_t j, std::size_t k) {
        return data[(i * shape[1] + j) * shape[2] + k];
    }
    double operator()(std::size_t i, std::size_t j, std::size_t k) const {
        return data[(i * shape[1] + j) * shape[2] + k];
    }

    bool same_shape(const Tensor& other) const { return shape == other.shape; }
    bool all_finite() const;
};

std::size_t shape_product(const std::vector<std::size_t>& shape);
std::string shape_to_string(const std::vector<std::size_t>& shape);

void require_finite(const Tensor& t, const std::string& what);

// a[m×k] * b[k×n] -> [m×n]
Tensor matmul(const Tensor& a, const Tensor& b);
// a[m×k] * b[n×k]^T -> [m×n]
Tensor matmul_nt(const Tensor& a, const Tensor& b);
// a[k×m]^T * b[k×n] -> [m×n]
Tensor matmul_tn(const Tensor& a, const Tensor& b);

Tensor transpose(const Tensor& a);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
void axpy(double alpha, const Tensor& x, Tensor& y);  // y += alpha * x
double dot(const Tensor& a, const Tensor& b);
double squared_norm(const Tensor& a);
double max_abs(const Tensor& a);

Tensor sigmoid(const Tensor& x);
double sigmoid(double x);
// Inverse sigmoid; inputs clamped into [eps, 1-eps] first.
Tensor logit(const Tensor& y, double eps = 1e-6);
double logit(double y, double eps = 1e-6);

// Symmetric eigendecomposition by cyclic Jacobi rotations. Eigenvalues are
// returned in descending order, eigenvectors as columns of the second tensor.
// Input must be symmetric within 1e-9; throws std::invalid_argument otherwise.
void sym_eig(const Tensor& s, Tensor& eigenvalues, Tensor& eigenvectors);

}  // namespace stsr
