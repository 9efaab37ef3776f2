#include "calib/surrogate.hpp"

#include <cmath>
#include <limits>

namespace calib {

std::size_t predict(const Vector& f) {
    if (f.empty()) throw InvalidInputError("predict: empty score vector");
    std::size_t best = 0;
    for (std::size_t i = 1; i < f.size(); ++i)
        if (f[i] > f[best]) best = i;
    return best;
}

double quadratic_surrogate(const Vector& f, std::size_t y, const TaskLoss& loss) {
    if (f.size() != loss.k || y >= loss.k)
        throw InvalidInputError("quadratic_surrogate: dimension mismatch");
    double s = 0.0;
    for (std::size_t c = 0; c < loss.k; ++c) {
        const double v = f[c] + loss.entry(c, y);
        s += v * v;
    }
    return s / (2.0 * loss.k);
}

Vector quadratic_gradient(const Vector& f, std::size_t y, const TaskLoss& loss) {
    if (f.size() != loss.k || y >= loss.k)
        throw InvalidInputError("quadratic_gradient: dimension mismatch");
    Vector g(loss.k);
    for (std::size_t c = 0; c < loss.k; ++c) g[c] = (f[c] + loss.entry(c, y)) / loss.k;
    return g;
}

Risks conditional_risks(const Vector& f, const CondDist& q, const TaskLoss& loss) {
    if (f.size() != loss.k) throw InvalidInputError("conditional_risks: dimension mismatch");
    const Vector ell = expected_loss_vector(loss, q);
    Risks r;
    r.task = ell[predict(f)];
    // phi-bar = (1/2k)( ||f||^2 + 2 f . (Lq) + sum_y q_y ||L(:,y)||^2 ).
    const Vector qd = q.to_dense();
    double sq = 0.0;
    for (std::size_t y = 0; y < loss.k; ++y) {
        if (qd[y] == 0.0) continue;
        double col = 0.0;
        for (std::size_t c = 0; c < loss.k; ++c) {
            const double e = loss.entry(c, y);
            col += e * e;
        }
        sq += qd[y] * col;
    }
    r.surrogate = (dot(f, f) + 2.0 * dot(f, ell) + sq) / (2.0 * loss.k);
    return r;
}

double excess_task_risk(const Vector& f, const CondDist& q, const TaskLoss& loss,
                        const ScoreSubspace& s) {
    if (f.size() != loss.k || s.k != loss.k)
        throw InvalidInputError("excess_task_risk: dimension mismatch");
    const Vector pf = s.project(f);
    double resid = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) resid = std::max(resid, std::abs(pf[i] - f[i]));
    if (resid > 1e-8) throw InvalidInputError("excess_task_risk: scores outside the subspace");
    const Vector ell = expected_loss_vector(loss, q);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t c : s.predictable) best = std::min(best, ell[c]);
    return ell[predict(f)] - best;
}

double excess_quadratic_surrogate(const Vector& theta, const CondDist& q, const TaskLoss& loss,
                                  const ScoreSubspace& s) {
    if (theta.size() != s.r || s.k != loss.k)
        throw InvalidInputError("excess_quadratic_surrogate: dimension mismatch");
    const Vector lq = expected_loss_vector(loss, q);
    const Vector plq = s.project(lq);
    const Vector f = s.f * theta;
    double v = 0.0;
    for (std::size_t i = 0; i < loss.k; ++i) {
        const double d = f[i] + plq[i];
        v += d * d;
    }
    return v / (2.0 * loss.k);
}

Vector optimal_parameters(const CondDist& q, const TaskLoss& loss, const ScoreSubspace& s) {
    if (s.k != loss.k) throw InvalidInputError("optimal_parameters: dimension mismatch");
    const Vector lq = expected_loss_vector(loss, q);
    // theta* = -F^+ (P_F L q) = -F^+ L q.
    const Matrix fpinv = pseudo_inverse(s.f);
    Vector theta = fpinv * lq;
    for (double& v : theta) v = -v;
    return theta;
}

double ab_surrogate(const AbSurrogateKind& kind, const Vector& f, std::size_t y,
                    const TaskLoss& loss) {
    if (f.size() != loss.k || y >= loss.k)
        throw InvalidInputError("ab_surrogate: dimension mismatch");
    double total = 0.0;
    for (std::size_t c = 0; c < loss.k; ++c) {
        const double l = loss.entry(c, y);
        const double fc = f[c];
        double a = 0.0, b = 0.0;
        switch (kind.kind) {
            case AbKind::Quadratic:
                a = fc;
                b = 0.5 * fc * fc;
                break;
            case AbKind::ExpPair:
                a = (std::exp(fc) - std::exp(-fc)) / kind.l_max;
                b = std::exp(-fc);
                break;
            case AbKind::Logistic:
                a = fc / kind.l_max;
                b = std::log1p(std::exp(-fc));
                break;
        }
        total += l * a + b;
    }
    return total / loss.k;
}

double ab_optimal_link(const AbSurrogateKind& kind, double expected_loss) {
    const double lm = kind.l_max;
    if (!(expected_loss >= 0.0 && expected_loss <= lm))
        throw InvalidInputError("ab_optimal_link: expected loss outside [0, l_max]");
    const double inf = std::numeric_limits<double>::infinity();
    switch (kind.kind) {
        case AbKind::Quadratic:
            return -expected_loss;
        case AbKind::ExpPair: {
            if (expected_loss == 0.0) return inf;
            if (expected_loss == lm) return -inf;
            return 0.5 * std::log(1.0 - expected_loss / lm) - 0.5 * std::log(expected_loss / lm);
        }
        case AbKind::Logistic: {
            if (expected_loss == 0.0) return inf;
            if (expected_loss == lm) return -inf;
            return std::log(1.0 - expected_loss / lm) - std::log(expected_loss / lm);
        }
    }
    throw InvalidInputError("ab_optimal_link: unknown kind");
}

} // namespace calib
