#pragma once

#include "calib/losses.hpp"
#include "calib/surrogate.hpp"

namespace calib {

/// Finite input pool with explicit feature vectors; risks are exact
/// expectations over the pool, so only label sampling is stochastic.
struct FeatureModel {
    std::size_t dim = 0;            // feature dimension d
    std::vector<Vector> pool;       // psi(x) per pool point, norms <= r_bound
    Vector weights;                 // sampling simplex over pool points
    double r_bound = 1.0;
};

struct ConditionalModel {
    Matrix v;                       // k x d, q(x) = V psi(x)
    double q_bound = 0.0;           // realized sum of row norms of V
    bool exact_fit = true;          // false when the pool overdetermines V
};

struct SgdConstants {
    double d_bound = 0.0;   // parameter-norm bound D
    double m_bound = 0.0;   // gradient-norm bound M
    double dm = 0.0;
    double step = 0.0;      // gamma = 2D/(M sqrt(N))
    std::size_t n = 0;
};

struct TrainResult {
    Matrix averaged_params;         // r x d
    double surrogate_risk = 0.0;
    double task_risk = 0.0;
    double suboptimality = 0.0;
    std::size_t iterations = 0;
    unsigned long seed = 0;
    std::vector<std::pair<std::size_t, double>> trace;  // (t, suboptimality)
};

/// D and M per the closed-form bounds; dm cross-checked against
/// l_max^2 (z^2 + z) with z = kappa(F) sqrt(r) R Q.
SgdConstants compute_constants(const ScoreSubspace& s, double l_max, double r_bound,
                               double q_bound, std::size_t n);

/// ceil(4 (DM)^2 / envelope^2) + 1 iterations suffice for expected excess
/// task risk below the target; NotConsistentError when envelope <= 0.
std::size_t iteration_bound(const SgdConstants& constants, double envelope_value);

/// Random unit-norm feature pool with uniform weights, and a linear
/// conditional model fit to random simplex targets (exact when
/// pool_size <= feature_dim).
std::pair<FeatureModel, ConditionalModel> make_generator(const ScoreSubspace& s,
                                                         const TaskLoss& loss,
                                                         std::size_t feature_dim,
                                                         std::size_t pool_size,
                                                         unsigned long seed);

/// Projection onto the Frobenius-norm ball.
Matrix project_frobenius_ball(const Matrix& w, double radius);

/// Exact task and surrogate risks of the linear score map W over the pool.
Risks evaluate_risks(const Matrix& w, const FeatureModel& fm, const ConditionalModel& cm,
                     const TaskLoss& loss, const ScoreSubspace& s);

/// Least-squares minimizer of the population surrogate risk over W.
Matrix optimal_linear_params(const FeatureModel& fm, const ConditionalModel& cm,
                             const TaskLoss& loss, const ScoreSubspace& s);

/// Projected SGD with constant step and uniform iterate averaging.
TrainResult asgd_train(const FeatureModel& fm, const ConditionalModel& cm, const TaskLoss& loss,
                       const ScoreSubspace& s, const SgdConstants& constants, std::size_t n,
                       unsigned long seed);

} // namespace calib
