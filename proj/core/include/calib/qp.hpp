#pragma once

#include "calib/matrix.hpp"

namespace calib {

/// Convex quadratic program
///   minimize 1/2 x^T Q x + c^T x
///   s.t.     a_i . x <= b_i   (inequalities)
///            e_j . x  = d_j   (equalities)
struct QpProblem {
    Matrix quadratic_term;                             // symmetric PSD
    Vector linear_term;
    std::vector<std::pair<Vector, double>> inequalities;
    std::vector<std::pair<Vector, double>> equalities;

    std::size_t dim() const { return linear_term.size(); }
};

enum class QpStatus { Solved, Infeasible };

struct QpResult {
    QpStatus status = QpStatus::Solved;
    Vector x;
    double objective = 0.0;
};

/// Log-barrier interior-point solver. Phase-I slack minimization finds a
/// strictly feasible start or declares Infeasible; barrier parameter grows
/// x10 per round, Newton tolerance 1e-10, duality-gap stop at `tolerance`
/// (default ladder expects 1e-9), at most 60 barrier rounds.
/// Throws ConvergenceError when the barrier loop fails to reach tolerance.
QpResult solve_qp(const QpProblem& p, double tolerance = 1e-9);

} // namespace calib
