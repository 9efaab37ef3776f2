#pragma once

#include <cstddef>
#include <initializer_list>
#include <vector>

#include "calib/errors.hpp"

namespace calib {

using Vector = std::vector<double>;

/// Dense row-major matrix of doubles. All dimensions here are small
/// (k <= a few thousand, r <= a few dozen), so no blocking or sparsity.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix identity(std::size_t n);
    static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    const std::vector<double>& data() const { return data_; }
    std::vector<double>& data() { return data_; }

    Vector row(std::size_t i) const;
    Vector col(std::size_t j) const;

    bool all_finite() const;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

Matrix operator*(const Matrix& a, const Matrix& b);
Vector operator*(const Matrix& a, const Vector& x);
Matrix operator+(const Matrix& a, const Matrix& b);
Matrix operator-(const Matrix& a, const Matrix& b);
Matrix operator*(double s, const Matrix& a);

Matrix transpose(const Matrix& a);
double frobenius_norm(const Matrix& a);
double dot(const Vector& a, const Vector& b);
double norm2(const Vector& a);

/// Singular value decomposition A = U S V^T with singular values sorted
/// nonincreasing and orthonormal U (rows x min_dim), V (cols x min_dim).
struct SvdFactors {
    Matrix u;
    Vector singular_values;
    Matrix v;

    double sigma_max() const { return singular_values.empty() ? 0.0 : singular_values.front(); }
    double sigma_min() const { return singular_values.empty() ? 0.0 : singular_values.back(); }
    /// Numerical rank at threshold 1e-9 * sigma_max.
    std::size_t rank() const;
};

/// One-sided Jacobi SVD; accurate at the small sizes used here.
SvdFactors svd(const Matrix& a);

/// Moore-Penrose pseudo-inverse via SVD, threshold 1e-9 * sigma_max.
Matrix pseudo_inverse(const Matrix& a);

/// Orthogonal projector P = F (F^T F)^+ F^T onto colspace(F).
Matrix orthogonal_projector(const Matrix& f);

/// Solve square system A x = b by partially pivoted Gaussian elimination;
/// falls back to a pseudo-inverse solve when the pivot degenerates.
Vector solve_linear(Matrix a, Vector b);

} // namespace calib
