#include "calib/qp.hpp"

#include <algorithm>
#include <cmath>

#include "calib/errors.hpp"

namespace calib {

namespace {

struct Reduced {
    Matrix quad;     // n x n
    Vector lin;      // n
    std::vector<Vector> a;   // inequality normals
    Vector b;                // inequality offsets
};

double quad_value(const Matrix& q, const Vector& c, const Vector& x) {
    const Vector qx = q * x;
    return 0.5 * dot(x, qx) + dot(c, x);
}

// Newton-centered log-barrier minimization of 1/2 y'Qy + c'y subject to
// a_i.y <= b_i, starting from the strictly feasible y0. Returns the final
// duality gap (#constraints / t).
double barrier_minimize(const Reduced& r, Vector& y, double gap_tol) {
    const std::size_t n = y.size();
    const std::size_t m = r.a.size();
    if (m == 0) {
        Matrix h = r.quad;
        for (std::size_t i = 0; i < n; ++i) h(i, i) += 1e-12;
        Vector rhs(n);
        for (std::size_t i = 0; i < n; ++i) rhs[i] = -r.lin[i];
        y = solve_linear(h, rhs);
        return 0.0;
    }

    auto slacks = [&](const Vector& pt, Vector& s) {
        for (std::size_t i = 0; i < m; ++i) s[i] = r.b[i] - dot(r.a[i], pt);
    };
    auto barrier_obj = [&](const Vector& pt, const Vector& s, double t) {
        double v = t * quad_value(r.quad, r.lin, pt);
        for (std::size_t i = 0; i < m; ++i) v -= std::log(s[i]);
        return v;
    };

    Vector s(m), s_new(m);
    slacks(y, s);

    double t = 1.0;
    double gap = static_cast<double>(m);
    for (int round = 0; round < 60; ++round) {
        for (int it = 0; it < 100; ++it) {
            Vector g = r.quad * y;
            for (std::size_t i = 0; i < n; ++i) g[i] = t * (g[i] + r.lin[i]);
            Matrix h = t * r.quad;
            for (std::size_t i = 0; i < n; ++i) h(i, i) += 1e-12;
            for (std::size_t i = 0; i < m; ++i) {
                const double inv = 1.0 / s[i];
                for (std::size_t p = 0; p < n; ++p) {
                    g[p] += r.a[i][p] * inv;
                    for (std::size_t q2 = 0; q2 < n; ++q2)
                        h(p, q2) += r.a[i][p] * r.a[i][q2] * inv * inv;
                }
            }
            Vector rhs(n);
            for (std::size_t i = 0; i < n; ++i) rhs[i] = -g[i];
            Vector dy = solve_linear(h, rhs);
            const double decrement = -dot(g, dy);
            if (!(decrement > 2e-10)) break;

            const double f0 = barrier_obj(y, s, t);
            double alpha = 1.0;
            bool moved = false;
            for (int ls = 0; ls < 60; ++ls) {
                Vector y_new(n);
                for (std::size_t i = 0; i < n; ++i) y_new[i] = y[i] + alpha * dy[i];
                slacks(y_new, s_new);
                if (*std::min_element(s_new.begin(), s_new.end()) > 0.0 &&
                    barrier_obj(y_new, s_new, t) <= f0 - 0.01 * alpha * decrement) {
                    y = y_new;
                    s = s_new;
                    moved = true;
                    break;
                }
                alpha *= 0.5;
            }
            if (!moved) break;
        }
        gap = static_cast<double>(m) / t;
        if (gap <= gap_tol) break;
        t *= 10.0;
    }
    return gap;
}

} // namespace

QpResult solve_qp(const QpProblem& p, double tolerance) {
    const std::size_t n = p.dim();
    if (p.quadratic_term.rows() != n || p.quadratic_term.cols() != n)
        throw InvalidInputError("solve_qp: quadratic term size mismatch");
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (std::abs(p.quadratic_term(i, j) - p.quadratic_term(j, i)) > 1e-12)
                throw InvalidInputError("solve_qp: quadratic term not symmetric");

    // Eliminate equality constraints: x = x0 + Z y with E x0 = d and
    // columns of Z spanning null(E).
    Vector x0(n, 0.0);
    Matrix z = Matrix::identity(n);
    if (!p.equalities.empty()) {
        Matrix e(p.equalities.size(), n);
        Vector d(p.equalities.size());
        for (std::size_t i = 0; i < p.equalities.size(); ++i) {
            if (p.equalities[i].first.size() != n)
                throw InvalidInputError("solve_qp: equality dimension mismatch");
            for (std::size_t j = 0; j < n; ++j) e(i, j) = p.equalities[i].first[j];
            d[i] = p.equalities[i].second;
        }
        x0 = pseudo_inverse(e) * d;
        Vector resid = e * x0;
        double err = 0.0;
        for (std::size_t i = 0; i < d.size(); ++i) err = std::max(err, std::abs(resid[i] - d[i]));
        if (err > 1e-8) return {QpStatus::Infeasible, {}, 0.0};

        const SvdFactors f = svd(transpose(e));     // n x m factorization
        const double thresh = 1e-9 * f.sigma_max();
        std::size_t rank = 0;
        for (double sv : f.singular_values)
            if (sv > thresh) ++rank;
        // Null space of E = complement of the range of E^T inside R^n.
        Matrix proj_range(n, n, 0.0);
        for (std::size_t l = 0; l < rank; ++l)
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j)
                    proj_range(i, j) += f.u(i, l) * f.u(j, l);
        Matrix comp = Matrix::identity(n) - proj_range;
        const SvdFactors fc = svd(comp);
        std::size_t null_dim = 0;
        for (double sv : fc.singular_values)
            if (sv > 0.5) ++null_dim;
        z = Matrix(n, null_dim);
        for (std::size_t l = 0; l < null_dim; ++l)
            for (std::size_t i = 0; i < n; ++i) z(i, l) = fc.u(i, l);
    }
    const std::size_t ny = z.cols();

    Reduced r;
    {
        const Matrix zt = transpose(z);
        r.quad = zt * (p.quadratic_term * z);
        // Symmetrize round-off.
        for (std::size_t i = 0; i < ny; ++i)
            for (std::size_t j = i + 1; j < ny; ++j) {
                const double v = 0.5 * (r.quad(i, j) + r.quad(j, i));
                r.quad(i, j) = v;
                r.quad(j, i) = v;
            }
        Vector qx0 = p.quadratic_term * x0;
        for (std::size_t i = 0; i < n; ++i) qx0[i] += p.linear_term[i];
        r.lin = zt * qx0;
    }
    for (const auto& [av, bv] : p.inequalities) {
        if (av.size() != n) throw InvalidInputError("solve_qp: inequality dimension mismatch");
        Vector ar(ny, 0.0);
        for (std::size_t j = 0; j < ny; ++j)
            for (std::size_t i = 0; i < n; ++i) ar[j] += av[i] * z(i, j);
        r.a.push_back(ar);
        r.b.push_back(bv - dot(av, x0));
    }

    if (ny == 0) {
        // Equalities pin x down completely; only feasibility remains.
        for (std::size_t i = 0; i < r.b.size(); ++i)
            if (r.b[i] < -1e-8) return {QpStatus::Infeasible, {}, 0.0};
        return {QpStatus::Solved, x0, quad_value(p.quadratic_term, p.linear_term, x0)};
    }

    Vector y(ny, 0.0);
    if (!r.a.empty()) {
        // Phase-I: minimize slack s with a_i.y - b_i <= s, s >= -1.
        Reduced ph;
        ph.quad = Matrix(ny + 1, ny + 1, 0.0);
        for (std::size_t i = 0; i < ny; ++i) ph.quad(i, i) = 1e-9;
        ph.lin = Vector(ny + 1, 0.0);
        ph.lin[ny] = 1.0;
        for (std::size_t i = 0; i < r.a.size(); ++i) {
            Vector row(ny + 1, 0.0);
            for (std::size_t j = 0; j < ny; ++j) row[j] = r.a[i][j];
            row[ny] = -1.0;
            ph.a.push_back(row);
            ph.b.push_back(r.b[i]);
        }
        {
            Vector row(ny + 1, 0.0);
            row[ny] = -1.0;
            ph.a.push_back(row);
            ph.b.push_back(1.0);
        }
        Vector ys(ny + 1, 0.0);
        double worst = -1.0;
        for (std::size_t i = 0; i < r.a.size(); ++i) worst = std::max(worst, -r.b[i]);
        ys[ny] = worst + 1.0;
        barrier_minimize(ph, ys, 1e-10);
        const double s_star = ys[ny];
        if (s_star > 1e-7) return {QpStatus::Infeasible, {}, 0.0};
        // Thin or boundary-touching interior: relax constraints by a hair so
        // the barrier has room; the induced objective error is O(1e-8).
        if (s_star > -1e-8) {
            const double relax = std::max(s_star, 0.0) + 1e-8;
            for (double& bv : r.b) bv += relax;
        }
        for (std::size_t j = 0; j < ny; ++j) y[j] = ys[j];
    }

    const double gap = barrier_minimize(r, y, tolerance);
    if (gap > tolerance && !r.a.empty())
        throw ConvergenceError("solve_qp: barrier method did not reach the duality-gap tolerance");

    QpResult out;
    out.status = QpStatus::Solved;
    out.x = x0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < ny; ++j) out.x[i] += z(i, j) * y[j];
    out.objective = quad_value(p.quadratic_term, p.linear_term, out.x);
    return out;
}

} // namespace calib
