#include "calib/learning.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace calib {

namespace {

Vector clamp_simplex(Vector q) {
    double total = 0.0;
    for (double& v : q) {
        v = std::max(v, 0.0);
        total += v;
    }
    if (total <= 0.0) throw InvalidInputError("conditional model produced a zero vector");
    for (double& v : q) v /= total;
    return q;
}

Vector pool_distribution(const ConditionalModel& cm, const Vector& psi) {
    return clamp_simplex(cm.v * psi);
}

std::size_t sample_index(const Vector& probs, double u) {
    double acc = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        acc += probs[i];
        if (u < acc) return i;
    }
    return probs.size() - 1;
}

} // namespace

SgdConstants compute_constants(const ScoreSubspace& s, double l_max, double r_bound,
                               double q_bound, std::size_t n) {
    if (n < 1) throw InvalidInputError("compute_constants: n must be >= 1");
    const double sigma_max = s.factors.sigma_max();
    const double sigma_min = s.factors.sigma_min();
    if (sigma_min <= 1e-9 * sigma_max)
        throw SingularSubspaceError("compute_constants: rank-deficient score matrix");
    const double k = static_cast<double>(s.k);
    const double r = static_cast<double>(s.r);

    SgdConstants c;
    c.n = n;
    c.d_bound = std::sqrt(r) / sigma_min * std::sqrt(k) * l_max * q_bound;
    c.m_bound = sigma_max * sigma_max / k * c.d_bound * r_bound * r_bound +
                sigma_max / k * std::sqrt(k) * l_max * r_bound;
    c.dm = c.d_bound * c.m_bound;
    c.step = 2.0 * c.d_bound / (c.m_bound * std::sqrt(static_cast<double>(n)));

    const double z = sigma_max / sigma_min * std::sqrt(r) * r_bound * q_bound;
    const double expected = l_max * l_max * (z * z + z);
    if (std::abs(c.dm - expected) > 1e-9 * std::max(1.0, std::abs(expected)))
        throw std::logic_error("compute_constants: DM cross-check failed");
    return c;
}

std::size_t iteration_bound(const SgdConstants& constants, double envelope_value) {
    if (envelope_value <= 0.0)
        throw NotConsistentError("surrogate is not consistent at this accuracy level");
    const double n_star = 4.0 * constants.dm * constants.dm / (envelope_value * envelope_value);
    if (n_star > 9e18) throw CapacityError("iteration bound exceeds the representable range");
    return static_cast<std::size_t>(std::ceil(n_star)) + 1;
}

std::pair<FeatureModel, ConditionalModel> make_generator(const ScoreSubspace& s,
                                                         const TaskLoss& loss,
                                                         std::size_t feature_dim,
                                                         std::size_t pool_size,
                                                         unsigned long seed) {
    if (feature_dim < 1) throw InvalidInputError("make_generator: feature_dim must be >= 1");
    if (pool_size < 1) throw InvalidInputError("make_generator: pool_size must be >= 1");
    (void)s;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::exponential_distribution<double> expo(1.0);

    FeatureModel fm;
    fm.dim = feature_dim;
    fm.r_bound = 1.0;
    fm.weights = Vector(pool_size, 1.0 / pool_size);
    for (std::size_t p = 0; p < pool_size; ++p) {
        Vector psi(feature_dim);
        double nrm = 0.0;
        while (nrm < 1e-12) {
            for (double& v : psi) v = gauss(rng);
            nrm = norm2(psi);
        }
        for (double& v : psi) v /= nrm;
        fm.pool.push_back(std::move(psi));
    }

    Matrix targets(loss.k, pool_size);
    for (std::size_t p = 0; p < pool_size; ++p) {
        double total = 0.0;
        Vector q(loss.k);
        for (double& v : q) {
            v = expo(rng);
            total += v;
        }
        for (std::size_t c = 0; c < loss.k; ++c) targets(c, p) = q[c] / total;
    }
    Matrix psi_mat(feature_dim, pool_size);
    for (std::size_t p = 0; p < pool_size; ++p)
        for (std::size_t c = 0; c < feature_dim; ++c) psi_mat(c, p) = fm.pool[p][c];

    ConditionalModel cm;
    cm.v = targets * pseudo_inverse(psi_mat);
    double violation = 0.0;
    for (std::size_t p = 0; p < pool_size; ++p) {
        const Vector q = cm.v * fm.pool[p];
        double total = 0.0;
        for (double v : q) {
            violation = std::max(violation, -v);
            total += v;
        }
        violation = std::max(violation, std::abs(total - 1.0));
    }
    cm.exact_fit = violation <= 1e-9;
    cm.q_bound = 0.0;
    for (std::size_t c = 0; c < loss.k; ++c) cm.q_bound += norm2(cm.v.row(c));
    return {std::move(fm), std::move(cm)};
}

Matrix project_frobenius_ball(const Matrix& w, double radius) {
    if (!(radius > 0.0)) throw InvalidInputError("project_frobenius_ball: radius must be > 0");
    const double nrm = frobenius_norm(w);
    if (nrm <= radius) return w;
    return (radius / nrm) * w;
}

Risks evaluate_risks(const Matrix& w, const FeatureModel& fm, const ConditionalModel& cm,
                     const TaskLoss& loss, const ScoreSubspace& s) {
    if (w.rows() != s.r || w.cols() != fm.dim)
        throw InvalidInputError("evaluate_risks: parameter shape mismatch");
    Risks total;
    for (std::size_t p = 0; p < fm.pool.size(); ++p) {
        const Vector f = s.f * (w * fm.pool[p]);
        const CondDist q = CondDist::from_dense(pool_distribution(cm, fm.pool[p]));
        const Risks r = conditional_risks(f, q, loss);
        total.task += fm.weights[p] * r.task;
        total.surrogate += fm.weights[p] * r.surrogate;
    }
    return total;
}

Matrix optimal_linear_params(const FeatureModel& fm, const ConditionalModel& cm,
                             const TaskLoss& loss, const ScoreSubspace& s) {
    const std::size_t pool = fm.pool.size();
    const std::size_t k = loss.k;
    const std::size_t r = s.r;
    const std::size_t d = fm.dim;
    const Matrix& l = loss.require_dense();

    Matrix a(k * pool, r * d, 0.0);
    Vector b(k * pool, 0.0);
    for (std::size_t p = 0; p < pool; ++p) {
        const double sw = std::sqrt(fm.weights[p]);
        const Vector q = pool_distribution(cm, fm.pool[p]);
        const Vector lq = l * q;
        for (std::size_t row = 0; row < k; ++row) {
            b[p * k + row] = sw * lq[row];
            for (std::size_t ar = 0; ar < r; ++ar)
                for (std::size_t c = 0; c < d; ++c)
                    a(p * k + row, ar * d + c) = sw * s.f(row, ar) * fm.pool[p][c];
        }
    }
    const Vector z = pseudo_inverse(a) * b;
    Matrix w(r, d);
    for (std::size_t ar = 0; ar < r; ++ar)
        for (std::size_t c = 0; c < d; ++c) w(ar, c) = -z[ar * d + c];
    return w;
}

TrainResult asgd_train(const FeatureModel& fm, const ConditionalModel& cm, const TaskLoss& loss,
                       const ScoreSubspace& s, const SgdConstants& constants, std::size_t n,
                       unsigned long seed) {
    const std::size_t r = s.r;
    const std::size_t d = fm.dim;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    const Matrix w_opt = optimal_linear_params(fm, cm, loss, s);
    const double opt_surrogate = evaluate_risks(w_opt, fm, cm, loss, s).surrogate;

    std::vector<Vector> pool_q;
    for (std::size_t p = 0; p < fm.pool.size(); ++p)
        pool_q.push_back(pool_distribution(cm, fm.pool[p]));

    std::vector<std::size_t> checkpoints;
    for (std::size_t t = 1; t < n; t = std::max(t + 1, t * 10 / 7))
        checkpoints.push_back(t);
    if (n >= 1) checkpoints.push_back(n);

    Matrix w(r, d, 0.0);
    Matrix w_sum(r, d, 0.0);
    TrainResult result;
    result.seed = seed;
    result.iterations = n;
    std::size_t next_cp = 0;
    const Matrix ft = transpose(s.f);
    for (std::size_t t = 1; t <= n; ++t) {
        const std::size_t x = sample_index(fm.weights, unif(rng));
        const std::size_t y = sample_index(pool_q[x], unif(rng));
        const Vector& psi = fm.pool[x];
        const Vector f = s.f * (w * psi);
        Vector g(loss.k);
        for (std::size_t c = 0; c < loss.k; ++c) g[c] = (f[c] + loss.entry(c, y)) / loss.k;
        const Vector ftg = ft * g;
        for (std::size_t ar = 0; ar < r; ++ar)
            for (std::size_t c = 0; c < d; ++c)
                w(ar, c) -= constants.step * ftg[ar] * psi[c];
        w = project_frobenius_ball(w, constants.d_bound);
        w_sum = w_sum + w;

        if (next_cp < checkpoints.size() && t == checkpoints[next_cp]) {
            Matrix avg = (1.0 / t) * w_sum;
            const Risks rk = evaluate_risks(avg, fm, cm, loss, s);
            result.trace.emplace_back(t, rk.surrogate - opt_surrogate);
            ++next_cp;
        }
    }

    result.averaged_params = n >= 1 ? (1.0 / n) * w_sum : Matrix(r, d, 0.0);
    const Risks rk = evaluate_risks(result.averaged_params, fm, cm, loss, s);
    result.surrogate_risk = rk.surrogate;
    result.task_risk = rk.task;
    result.suboptimality = rk.surrogate - opt_surrogate;
    return result;
}

} // namespace calib
