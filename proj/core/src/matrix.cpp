#include "calib/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace calib {

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n, 0.0);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r == 0 ? 0 : rows.begin()->size();
    Matrix m(r, c);
    std::size_t i = 0;
    for (const auto& row : rows) {
        if (row.size() != c) throw InvalidInputError("ragged initializer for Matrix");
        std::size_t j = 0;
        for (double v : row) m(i, j++) = v;
        ++i;
    }
    return m;
}

Vector Matrix::row(std::size_t i) const {
    Vector r(cols_);
    for (std::size_t j = 0; j < cols_; ++j) r[j] = (*this)(i, j);
    return r;
}

Vector Matrix::col(std::size_t j) const {
    Vector c(rows_);
    for (std::size_t i = 0; i < rows_; ++i) c[i] = (*this)(i, j);
    return c;
}

bool Matrix::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Matrix operator*(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) throw InvalidInputError("matrix product dimension mismatch");
    Matrix c(a.rows(), b.cols(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t l = 0; l < a.cols(); ++l) {
            const double ail = a(i, l);
            if (ail == 0.0) continue;
            for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += ail * b(l, j);
        }
    return c;
}

Vector operator*(const Matrix& a, const Vector& x) {
    if (a.cols() != x.size()) throw InvalidInputError("matrix-vector dimension mismatch");
    Vector y(a.rows(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < a.cols(); ++j) s += a(i, j) * x[j];
        y[i] = s;
    }
    return y;
}

Matrix operator+(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw InvalidInputError("matrix sum dimension mismatch");
    Matrix c = a;
    for (std::size_t i = 0; i < c.data().size(); ++i) c.data()[i] += b.data()[i];
    return c;
}

Matrix operator-(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw InvalidInputError("matrix difference dimension mismatch");
    Matrix c = a;
    for (std::size_t i = 0; i < c.data().size(); ++i) c.data()[i] -= b.data()[i];
    return c;
}

Matrix operator*(double s, const Matrix& a) {
    Matrix c = a;
    for (double& v : c.data()) v *= s;
    return c;
}

Matrix transpose(const Matrix& a) {
    Matrix t(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
    return t;
}

double frobenius_norm(const Matrix& a) {
    double s = 0.0;
    for (double v : a.data()) s += v * v;
    return std::sqrt(s);
}

double dot(const Vector& a, const Vector& b) {
    return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

double norm2(const Vector& a) { return std::sqrt(dot(a, a)); }

std::size_t SvdFactors::rank() const {
    const double thresh = 1e-9 * sigma_max();
    std::size_t r = 0;
    for (double s : singular_values)
        if (s > thresh) ++r;
    return r;
}

namespace {

// Orthonormalize the null columns of U against the already-unit columns,
// drawing replacement directions from the standard basis.
void complete_basis(Matrix& u, const std::vector<bool>& is_null) {
    const std::size_t m = u.rows();
    const std::size_t n = u.cols();
    for (std::size_t j = 0; j < n; ++j) {
        if (!is_null[j]) continue;
        for (std::size_t e = 0; e < m; ++e) {
            Vector cand(m, 0.0);
            cand[e] = 1.0;
            for (std::size_t l = 0; l < n; ++l) {
                if (l == j) continue;
                double p = 0.0;
                for (std::size_t i = 0; i < m; ++i) p += u(i, l) * cand[i];
                for (std::size_t i = 0; i < m; ++i) cand[i] -= p * u(i, l);
            }
            const double nrm = norm2(cand);
            if (nrm > 1e-6) {
                for (std::size_t i = 0; i < m; ++i) u(i, j) = cand[i] / nrm;
                break;
            }
        }
    }
}

} // namespace

SvdFactors svd(const Matrix& a) {
    if (!a.all_finite()) throw InvalidInputError("svd: non-finite input");
    if (a.rows() < a.cols()) {
        SvdFactors f = svd(transpose(a));
        std::swap(f.u, f.v);
        return f;
    }
    const std::size_t m = a.rows();
    const std::size_t n = a.cols();

    Matrix w = a;                    // columns get rotated in place
    Matrix v = Matrix::identity(n);

    const double eps = 1e-15;
    const int max_sweeps = 60;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        bool rotated = false;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                double app = 0.0, aqq = 0.0, apq = 0.0;
                for (std::size_t i = 0; i < m; ++i) {
                    app += w(i, p) * w(i, p);
                    aqq += w(i, q) * w(i, q);
                    apq += w(i, p) * w(i, q);
                }
                if (std::abs(apq) <= eps * std::sqrt(app * aqq) || apq == 0.0) continue;
                rotated = true;
                const double tau = (aqq - app) / (2.0 * apq);
                const double t = (tau >= 0 ? 1.0 : -1.0) /
                                 (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (std::size_t i = 0; i < m; ++i) {
                    const double wp = w(i, p), wq = w(i, q);
                    w(i, p) = c * wp - s * wq;
                    w(i, q) = s * wp + c * wq;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    const double vp = v(i, p), vq = v(i, q);
                    v(i, p) = c * vp - s * vq;
                    v(i, q) = s * vp + c * vq;
                }
            }
        }
        if (!rotated) break;
    }

    SvdFactors f;
    f.singular_values.resize(n);
    f.u = Matrix(m, n);
    std::vector<bool> is_null(n, false);
    std::vector<std::size_t> order(n);
    Vector norms(n);
    for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < m; ++i) s += w(i, j) * w(i, j);
        norms[j] = std::sqrt(s);
    }
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return norms[x] > norms[y]; });

    Matrix vs(n, n);
    const double sigma_max = norms.empty() ? 0.0 : norms[order[0]];
    for (std::size_t jj = 0; jj < n; ++jj) {
        const std::size_t j = order[jj];
        f.singular_values[jj] = norms[j];
        if (norms[j] > 1e-300 && norms[j] > 1e-14 * sigma_max) {
            for (std::size_t i = 0; i < m; ++i) f.u(i, jj) = w(i, j) / norms[j];
        } else {
            is_null[jj] = true;
            f.singular_values[jj] = norms[j];
        }
        for (std::size_t i = 0; i < n; ++i) vs(i, jj) = v(i, j);
    }
    complete_basis(f.u, is_null);
    f.v = vs;
    return f;
}

Matrix pseudo_inverse(const Matrix& a) {
    if (!a.all_finite()) throw InvalidInputError("pseudo_inverse: non-finite input");
    const SvdFactors f = svd(a);
    const double thresh = 1e-9 * f.sigma_max();
    // A^+ = V diag(1/sigma) U^T over the numerically nonzero part.
    Matrix pinv(a.cols(), a.rows(), 0.0);
    for (std::size_t l = 0; l < f.singular_values.size(); ++l) {
        const double s = f.singular_values[l];
        if (s <= thresh) continue;
        const double inv = 1.0 / s;
        for (std::size_t i = 0; i < a.cols(); ++i) {
            const double vi = f.v(i, l) * inv;
            if (vi == 0.0) continue;
            for (std::size_t j = 0; j < a.rows(); ++j) pinv(i, j) += vi * f.u(j, l);
        }
    }
    return pinv;
}

Matrix orthogonal_projector(const Matrix& f) {
    if (!f.all_finite()) throw InvalidInputError("orthogonal_projector: non-finite input");
    // P = U U^T over the nonzero singular directions; equals F (F^T F)^+ F^T.
    const SvdFactors s = svd(f);
    const double thresh = 1e-9 * s.sigma_max();
    Matrix p(f.rows(), f.rows(), 0.0);
    for (std::size_t l = 0; l < s.singular_values.size(); ++l) {
        if (s.singular_values[l] <= thresh) continue;
        for (std::size_t i = 0; i < f.rows(); ++i) {
            const double ui = s.u(i, l);
            if (ui == 0.0) continue;
            for (std::size_t j = 0; j < f.rows(); ++j) p(i, j) += ui * s.u(j, l);
        }
    }
    return p;
}

Vector solve_linear(Matrix a, Vector b) {
    const std::size_t n = a.rows();
    if (a.cols() != n || b.size() != n) throw InvalidInputError("solve_linear: not square");
    Matrix orig = a;
    Vector rhs = b;
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    bool degenerate = false;
    for (std::size_t col = 0; col < n && !degenerate; ++col) {
        std::size_t piv = col;
        for (std::size_t i = col + 1; i < n; ++i)
            if (std::abs(a(i, col)) > std::abs(a(piv, col))) piv = i;
        if (std::abs(a(piv, col)) < 1e-13) {
            degenerate = true;
            break;
        }
        if (piv != col) {
            for (std::size_t j = 0; j < n; ++j) std::swap(a(col, j), a(piv, j));
            std::swap(b[col], b[piv]);
        }
        for (std::size_t i = col + 1; i < n; ++i) {
            const double fac = a(i, col) / a(col, col);
            if (fac == 0.0) continue;
            for (std::size_t j = col; j < n; ++j) a(i, j) -= fac * a(col, j);
            b[i] -= fac * b[col];
        }
    }
    if (degenerate) {
        const Matrix pinv = pseudo_inverse(orig);
        return pinv * rhs;
    }
    Vector x(n, 0.0);
    for (std::size_t ii = n; ii-- > 0;) {
        double s = b[ii];
        for (std::size_t j = ii + 1; j < n; ++j) s -= a(ii, j) * x[j];
        x[ii] = s / a(ii, ii);
    }
    return x;
}

} // namespace calib
