#include "calib/calibration.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <map>
#include <random>
#include <thread>

#include "calib/surrogate.hpp"

namespace calib {

namespace {

bool equal_blocks(const BlockStructure& bs) {
    for (std::size_t s : bs.sizes)
        if (s != bs.sizes[0]) return false;
    return true;
}

bool colspace_contained(const TaskLoss& loss, const ScoreSubspace& s) {
    const Matrix& l = loss.require_dense();
    double resid = 0.0;
    for (std::size_t j = 0; j < loss.k; ++j) {
        const Vector col = l.col(j);
        const Vector pcol = s.project(col);
        for (std::size_t i = 0; i < loss.k; ++i)
            resid += (pcol[i] - col[i]) * (pcol[i] - col[i]);
    }
    return std::sqrt(resid) <= 1e-8;
}

// Columns of U spanning the subspace (orthonormal, numerically full rank).
Matrix thin_basis(const ScoreSubspace& s) {
    const double thresh = 1e-9 * s.factors.sigma_max();
    std::size_t rank = 0;
    for (double sv : s.factors.singular_values)
        if (sv > thresh) ++rank;
    Matrix u(s.k, rank);
    for (std::size_t l = 0; l < rank; ++l)
        for (std::size_t i = 0; i < s.k; ++i) u(i, l) = s.factors.u(i, l);
    return u;
}

struct PairClass {
    std::size_t i;
    std::size_t j;
};

std::vector<PairClass> representative_pairs(const TaskLoss& loss, const ScoreSubspace& s) {
    std::vector<PairClass> reps;
    const bool builtin_subspace = s.kind != SubspaceKind::Custom;
    if (builtin_subspace && loss.kind == LossKind::ZeroOne) {
        reps.push_back({0, 1});
        return reps;
    }
    if (builtin_subspace && loss.kind == LossKind::Hamming) {
        const unsigned t = *loss.t;
        for (unsigned d = 1; d <= t; ++d)
            reps.push_back({0, (std::size_t{1} << d) - 1});
        return reps;
    }
    if (builtin_subspace && loss.blocks &&
        (loss.kind == LossKind::BlockZeroOne || loss.kind == LossKind::Mixed)) {
        const BlockStructure& bs = *loss.blocks;
        std::map<std::pair<std::size_t, std::size_t>, PairClass> cross;
        for (std::size_t v = 0; v < bs.block_count(); ++v)
            for (std::size_t u = 0; u < bs.block_count(); ++u) {
                if (v == u) continue;
                cross.try_emplace({bs.sizes[v], bs.sizes[u]},
                                  PairClass{bs.block_first_label[v], bs.block_first_label[u]});
            }
        for (const auto& [key, pc] : cross) reps.push_back(pc);
        if (s.kind == SubspaceKind::Full) {
            std::map<std::size_t, PairClass> within;
            for (std::size_t v = 0; v < bs.block_count(); ++v)
                if (bs.sizes[v] >= 2)
                    within.try_emplace(bs.sizes[v], PairClass{bs.block_first_label[v],
                                                              bs.block_first_label[v] + 1});
            for (const auto& [key, pc] : within) reps.push_back(pc);
        }
        return reps;
    }
    for (std::size_t i : s.predictable)
        for (std::size_t j : s.predictable)
            if (i != j) reps.push_back({i, j});
    return reps;
}

unsigned effective_threads(unsigned requested) {
    unsigned n = requested != 0 ? requested : std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("CALIB_THREADS")) {
        const long cap = std::strtol(env, nullptr, 10);
        if (cap >= 1) n = std::min<unsigned>(n, static_cast<unsigned>(cap));
    }
    return std::max(1u, n);
}

} // namespace

CalibrationValue exact_calibration(const CalibrationQuery& query) {
    const TaskLoss& loss = query.loss;
    const ScoreSubspace& s = query.subspace;
    const double eps = query.epsilon;
    const double k = static_cast<double>(loss.k);
    if (eps < 0.0) throw InvalidInputError("exact_calibration: epsilon must be nonnegative");
    if (eps > loss.l_max + 1e-12) return CalibrationValue::infinity(CalibMethod::Exact);

    auto done = [](double v) { return CalibrationValue::finite(v, CalibMethod::Exact); };

    if (loss.kind == LossKind::ZeroOne && s.kind == SubspaceKind::Full)
        return done(eps * eps / (4.0 * k));

    if (loss.kind == LossKind::BlockZeroOne && s.kind == SubspaceKind::Full) {
        double factor = std::numeric_limits<double>::infinity();
        for (std::size_t sv : loss.blocks->sizes)
            factor = std::min(factor, 2.0 * sv / (sv + 1.0));
        return done(eps * eps / (4.0 * k) * factor);
    }

    if (loss.kind == LossKind::BlockZeroOne && s.kind == SubspaceKind::BlockIndicator) {
        const auto& sizes = loss.blocks->sizes;
        double factor = std::numeric_limits<double>::infinity();
        for (std::size_t v = 0; v < sizes.size(); ++v)
            for (std::size_t u = v + 1; u < sizes.size(); ++u)
                factor = std::min(factor, 2.0 * sizes[v] * sizes[u] /
                                              static_cast<double>(sizes[v] + sizes[u]));
        return done(eps * eps / (4.0 * k) * factor);
    }

    if (loss.kind == LossKind::Hamming && s.kind == SubspaceKind::HammingBasis)
        return done(eps * eps / (8.0 * static_cast<double>(*loss.t)));

    if (loss.kind == LossKind::Mixed && s.kind == SubspaceKind::Full) {
        if (!equal_blocks(*loss.blocks))
            throw UnsupportedError("closed form for the mixed loss needs equal blocks");
        const double eta = *loss.eta;
        const double sz = static_cast<double>(loss.blocks->sizes[0]);
        const double breakpoint =
            eta >= 1.0 ? std::numeric_limits<double>::infinity() : eta / (1.0 - eta);
        if (eps <= breakpoint) return done(eps * eps / (4.0 * k));
        const double first = eps * eps * sz / (2.0 * k * (sz + 1.0));
        const double second = eta * (eps + 1.0) * (sz - 1.0) * (2.0 * eps - eps * eta - eta) /
                              (4.0 * k * (sz + 1.0));
        return done(first - second);
    }

    if (loss.kind == LossKind::Mixed && s.kind == SubspaceKind::BlockIndicator) {
        if (!equal_blocks(*loss.blocks))
            throw UnsupportedError("closed form for the mixed loss needs equal blocks");
        const double eta = *loss.eta;
        const double b = static_cast<double>(loss.blocks->block_count());
        if (eps <= eta / 2.0) return done(0.0);
        const double base = (eps - eta / 2.0) * (eps - eta / 2.0) / (4.0 * b);
        const double ratio = (eta * b / k + 1.0 - eta) / (1.0 - eta / 2.0);
        return done(base * ratio * ratio);
    }

    throw UnsupportedError("no closed form for this loss/subspace combination");
}

LowerBoundPair lower_bound(const CalibrationQuery& query) {
    const double eps = query.epsilon;
    const double k = static_cast<double>(query.loss.k);
    if (eps < 0.0) throw InvalidInputError("lower_bound: epsilon must be nonnegative");
    if (!colspace_contained(query.loss, query.subspace))
        throw HypothesisError("lower_bound: loss column space not contained in the subspace");
    const double norm = max_projected_pair_norm(query.subspace);
    LowerBoundPair out;
    out.tight = CalibrationValue::finite(eps * eps / (2.0 * k * norm), CalibMethod::LowerBound);
    out.crude = CalibrationValue::finite(eps * eps / (4.0 * k), CalibMethod::LowerBound);
    return out;
}

CalibrationValue upper_bound(const CalibrationQuery& query) {
    if (query.subspace.kind != SubspaceKind::Full)
        throw HypothesisError("upper_bound: requires unconstrained scores");
    if (!is_pseudometric(query.loss))
        throw HypothesisError("upper_bound: loss is not a pseudometric");
    if (query.epsilon > query.loss.l_max + 1e-12)
        throw HypothesisError("upper_bound: epsilon exceeds l_max");
    const double eps = query.epsilon;
    return CalibrationValue::finite(eps * eps / (2.0 * query.loss.k), CalibMethod::UpperBound);
}

double max_projected_pair_norm(const ScoreSubspace& s) {
    switch (s.kind) {
        case SubspaceKind::Full:
            return 2.0;
        case SubspaceKind::HammingBasis: {
            const double t = static_cast<double>(s.r - 1);
            return 4.0 * t / std::pow(2.0, t);
        }
        case SubspaceKind::BlockIndicator: {
            Vector sizes(s.r, 0.0);
            for (std::size_t i = 0; i < s.k; ++i)
                for (std::size_t v = 0; v < s.r; ++v) sizes[v] += s.f(i, v);
            std::sort(sizes.begin(), sizes.end());
            return 1.0 / sizes[0] + 1.0 / sizes[1];
        }
        case SubspaceKind::Custom:
            break;
    }
    const Matrix& p = s.require_projector();
    double best = 0.0;
    for (std::size_t i = 0; i < s.k; ++i)
        for (std::size_t j = i + 1; j < s.k; ++j) {
            double n = 0.0;
            for (std::size_t l = 0; l < s.k; ++l) {
                const double d = p(l, i) - p(l, j);
                n += d * d;
            }
            best = std::max(best, n);
        }
    return best;
}

CalibrationValue pair_calibration(std::size_t i, std::size_t j, const CalibrationQuery& query,
                                  double scale) {
    const TaskLoss& loss = query.loss;
    const ScoreSubspace& s = query.subspace;
    const double eps = query.epsilon;
    if (i == j) throw InvalidInputError("pair_calibration: labels must differ");
    auto is_pred = [&](std::size_t c) {
        return std::find(s.predictable.begin(), s.predictable.end(), c) != s.predictable.end();
    };
    if (!is_pred(i) || !is_pred(j))
        throw InvalidInputError("pair_calibration: labels must be predictable");
    if (eps < 0.0) throw InvalidInputError("pair_calibration: epsilon must be nonnegative");

    const Matrix& l = loss.require_dense();
    const std::size_t k = loss.k;
    const Matrix u = thin_basis(s);
    const std::size_t rank = u.cols();
    const std::size_t n = rank + k;

    // Objective (scale/2k) || U theta' + P_F L q ||^2 over x = (theta', q).
    Matrix g(k, n, 0.0);
    for (std::size_t row = 0; row < k; ++row)
        for (std::size_t col = 0; col < rank; ++col) g(row, col) = u(row, col);
    for (std::size_t col = 0; col < k; ++col) {
        const Vector plcol = s.project(l.col(col));
        for (std::size_t row = 0; row < k; ++row) g(row, rank + col) = plcol[row];
    }
    QpProblem p;
    p.quadratic_term = (scale / k) * (transpose(g) * g);
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = a + 1; b < n; ++b) {
            const double v = 0.5 * (p.quadratic_term(a, b) + p.quadratic_term(b, a));
            p.quadratic_term(a, b) = v;
            p.quadratic_term(b, a) = v;
        }
    p.linear_term = Vector(n, 0.0);

    auto loss_row_diff = [&](std::size_t a, std::size_t b) {
        Vector row(n, 0.0);
        for (std::size_t col = 0; col < k; ++col) row[rank + col] = l(a, col) - l(b, col);
        return row;
    };
    p.inequalities.emplace_back(loss_row_diff(i, j), -eps);
    for (std::size_t c : s.predictable) {
        if (c != i) p.inequalities.emplace_back(loss_row_diff(i, c), 0.0);
        if (c != j) {
            Vector row(n, 0.0);
            for (std::size_t col = 0; col < rank; ++col) row[col] = u(c, col) - u(j, col);
            p.inequalities.emplace_back(row, 0.0);
        }
    }
    for (std::size_t c = 0; c < k; ++c) {
        Vector row(n, 0.0);
        row[rank + c] = -1.0;
        p.inequalities.emplace_back(row, 0.0);
    }
    Vector ones(n, 0.0);
    for (std::size_t c = 0; c < k; ++c) ones[rank + c] = 1.0;
    p.equalities.emplace_back(ones, 1.0);

    const QpResult res = solve_qp(p, 1e-9);
    if (res.status == QpStatus::Infeasible)
        return CalibrationValue::infinity(CalibMethod::Numeric);

    CalibrationValue out = CalibrationValue::finite(res.objective, CalibMethod::Numeric);
    CalibrationWitness w;
    w.q.assign(res.x.begin() + rank, res.x.end());
    for (double& qc : w.q) qc = std::max(qc, 0.0);
    Vector f(k, 0.0);
    for (std::size_t row = 0; row < k; ++row)
        for (std::size_t col = 0; col < rank; ++col) f[row] += u(row, col) * res.x[col];
    w.theta = pseudo_inverse(s.f) * f;
    out.certificate = std::move(w);
    return out;
}

CalibrationValue numeric_calibration(const CalibrationQuery& query, double scale) {
    if (query.loss.k > 256) throw CapacityError("numeric_calibration: k > 256");
    const std::vector<PairClass> reps = representative_pairs(query.loss, query.subspace);
    CalibrationValue best = CalibrationValue::infinity(CalibMethod::Numeric);
    for (const PairClass& pc : reps) {
        CalibrationValue v = pair_calibration(pc.i, pc.j, query, scale);
        if (v.infinite) continue;
        if (best.infinite || v.value < best.value) best = std::move(v);
    }
    return best;
}

CalibrationValue sampled_upper_bound(const CalibrationQuery& query, std::size_t samples,
                                     unsigned seed) {
    const TaskLoss& loss = query.loss;
    const ScoreSubspace& s = query.subspace;
    if (loss.k > 2048) throw CapacityError("sampled_upper_bound: label space too large");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::exponential_distribution<double> expo(1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    CalibrationValue best = CalibrationValue::infinity(CalibMethod::Sampled);
    std::size_t feasible = 0;
    const std::size_t npred = s.predictable.size();
    for (std::size_t it = 0; it < samples; ++it) {
        Vector q(loss.k, 0.0);
        if (it % 2 == 0 && npred >= 2) {
            // Concentrated on a predictable pair; mirrors the adversarial
            // structure of the defining program.
            std::size_t a = s.predictable[rng() % npred];
            std::size_t b = s.predictable[rng() % npred];
            if (a == b) continue;
            const double gap = unif(rng);
            q[a] = 0.5 + gap / 2.0;
            q[b] = 0.5 - gap / 2.0;
        } else {
            double total = 0.0;
            for (double& v : q) {
                v = expo(rng);
                total += v;
            }
            for (double& v : q) v /= total;
        }
        const CondDist dist = CondDist::from_dense(q);
        Vector theta = optimal_parameters(dist, loss, s);
        const double sigma = 2.0 * unif(rng);
        for (double& v : theta) v += sigma * gauss(rng);
        const Vector f = s.f * theta;
        const double dl = excess_task_risk(f, dist, loss, s);
        if (dl < query.epsilon) continue;
        ++feasible;
        const double dphi = excess_quadratic_surrogate(theta, dist, loss, s);
        if (best.infinite || dphi < best.value) {
            best = CalibrationValue::finite(dphi, CalibMethod::Sampled);
            best.certificate = CalibrationWitness{dist.to_dense(), theta};
        }
    }
    best.feasible_samples = feasible;
    best.method = CalibMethod::Sampled;
    return best;
}

std::vector<CalibrationValue> convex_envelope(const Vector& epsilons,
                                              const std::vector<CalibrationValue>& values) {
    if (epsilons.size() != values.size())
        throw InvalidInputError("convex_envelope: grid/value size mismatch");
    for (std::size_t i = 1; i < epsilons.size(); ++i)
        if (epsilons[i] <= epsilons[i - 1])
            throw InvalidInputError("convex_envelope: grid must be increasing");

    std::size_t n = 0;
    while (n < values.size() && !values[n].infinite) ++n;

    std::vector<CalibrationValue> out(values.size());
    for (std::size_t i = n; i < values.size(); ++i)
        out[i] = CalibrationValue::infinity(values[i].method);
    if (n == 0) return out;

    // Lower convex hull over the finite prefix.
    std::vector<std::size_t> hull;
    auto cross = [&](std::size_t a, std::size_t b, std::size_t c) {
        return (epsilons[b] - epsilons[a]) * (values[c].value - values[a].value) -
               (values[b].value - values[a].value) * (epsilons[c] - epsilons[a]);
    };
    for (std::size_t i = 0; i < n; ++i) {
        while (hull.size() >= 2 && cross(hull[hull.size() - 2], hull.back(), i) <= 0.0)
            hull.pop_back();
        hull.push_back(i);
    }
    Vector h(n);
    std::size_t seg = 0;
    for (std::size_t i = 0; i < n; ++i) {
        while (seg + 1 < hull.size() && epsilons[hull[seg + 1]] < epsilons[i]) ++seg;
        if (seg + 1 >= hull.size()) {
            h[i] = values[hull.back()].value;
        } else {
            const std::size_t a = hull[seg], b = hull[seg + 1];
            const double w = (epsilons[i] - epsilons[a]) / (epsilons[b] - epsilons[a]);
            h[i] = (1.0 - w) * values[a].value + w * values[b].value;
        }
    }
    // Greatest nondecreasing convex minorant: flatten any initial descent.
    for (std::size_t i = n; i-- > 0;) {
        if (i + 1 < n) h[i] = std::min(h[i], h[i + 1]);
        out[i] = CalibrationValue::finite(h[i], values[i].method);
    }
    return out;
}

CalibrationCurve sweep(const TaskLoss& loss, const ScoreSubspace& subspace, const Vector& grid,
                       const SweepOptions& options) {
    CalibrationCurve curve;
    curve.points.resize(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) curve.points[i].epsilon = grid[i];

    auto run_point = [&](std::size_t idx) {
        CurvePoint& pt = curve.points[idx];
        const CalibrationQuery query{loss, subspace, pt.epsilon};
        try {
            if (options.methods.exact) {
                try {
                    pt.exact = exact_calibration(query);
                } catch (const UnsupportedError&) {
                }
            }
            if (options.methods.numeric) pt.numeric = numeric_calibration(query);
            if (options.methods.bounds) {
                try {
                    const LowerBoundPair lb = lower_bound(query);
                    pt.lower_tight = lb.tight;
                    pt.lower_crude = lb.crude;
                } catch (const HypothesisError&) {
                }
                try {
                    pt.upper = upper_bound(query);
                } catch (const HypothesisError&) {
                }
            }
            if (options.methods.sampled)
                pt.sampled = sampled_upper_bound(query, options.samples,
                                                 options.seed + static_cast<unsigned>(idx));
        } catch (const std::exception& e) {
            pt.error = e.what();
        }
    };

    const unsigned nthreads =
        std::min<unsigned>(effective_threads(options.threads),
                           std::max<std::size_t>(grid.size(), 1));
    if (nthreads <= 1 || grid.size() <= 1) {
        for (std::size_t i = 0; i < grid.size(); ++i) run_point(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> workers;
        for (unsigned w = 0; w < nthreads; ++w)
            workers.emplace_back([&] {
                for (std::size_t i = next++; i < grid.size(); i = next++) run_point(i);
            });
        for (std::thread& th : workers) th.join();
    }

    // Envelope of the preferred column.
    bool use_exact = options.methods.exact;
    bool use_numeric = options.methods.numeric;
    for (const CurvePoint& pt : curve.points) {
        if (!pt.exact) use_exact = false;
        if (!pt.numeric) use_numeric = false;
    }
    if (!grid.empty() && (use_exact || use_numeric)) {
        std::vector<CalibrationValue> column;
        for (const CurvePoint& pt : curve.points)
            column.push_back(use_exact ? *pt.exact : *pt.numeric);
        const std::vector<CalibrationValue> env = convex_envelope(grid, column);
        for (std::size_t i = 0; i < grid.size(); ++i) curve.points[i].envelope = env[i];
    }
    return curve;
}

} // namespace calib
