#pragma once

#include "calib/losses.hpp"

namespace calib {

/// Argmax with ties broken to the smallest label index.
std::size_t predict(const Vector& f);

/// (1/2k) || f + L(:,y) ||^2.
double quadratic_surrogate(const Vector& f, std::size_t y, const TaskLoss& loss);

/// Gradient in f of the quadratic surrogate: (1/k)(f + L(:,y)).
Vector quadratic_gradient(const Vector& f, std::size_t y, const TaskLoss& loss);

struct Risks {
    double task = 0.0;
    double surrogate = 0.0;
};

/// Conditional task risk and conditional surrogate risk at fixed scores.
Risks conditional_risks(const Vector& f, const CondDist& q, const TaskLoss& loss);

/// Task risk of f minus the best achievable over the subspace's
/// predictable labels. f must lie in the subspace (residual <= 1e-8).
double excess_task_risk(const Vector& f, const CondDist& q, const TaskLoss& loss,
                        const ScoreSubspace& s);

/// (1/2k) || F theta + P_F L q ||^2; reduces to || F theta + L q ||^2 when
/// colspace(L) is contained in the subspace.
double excess_quadratic_surrogate(const Vector& theta, const CondDist& q, const TaskLoss& loss,
                                  const ScoreSubspace& s);

/// theta* = -(F^T F)^+ F^T L q, the surrogate-risk minimizer over the subspace.
Vector optimal_parameters(const CondDist& q, const TaskLoss& loss, const ScoreSubspace& s);

enum class AbKind { Quadratic, ExpPair, Logistic };

struct AbSurrogateKind {
    AbKind kind = AbKind::Quadratic;
    double l_max = 1.0;
};

/// (1/k) sum_c ( L(c,y) a(f_c) + b(f_c) ) for the chosen (a, b) pair.
double ab_surrogate(const AbSurrogateKind& kind, const Vector& f, std::size_t y,
                    const TaskLoss& loss);

/// Optimal score for a component with expected loss ell; returns signed
/// infinity at the boundary ell in {0, l_max} for ExpPair/Logistic.
double ab_optimal_link(const AbSurrogateKind& kind, double expected_loss);

} // namespace calib
