#pragma once

#include "calib/losses.hpp"
#include "calib/qp.hpp"

namespace calib {

enum class CalibMethod { Exact, Numeric, LowerBound, UpperBound, Sampled };

struct CalibrationQuery {
    const TaskLoss& loss;
    const ScoreSubspace& subspace;
    double epsilon = 0.0;
};

struct CalibrationWitness {
    Vector q;       // label distribution
    Vector theta;   // subspace parameters (length r)
};

struct CalibrationValue {
    double value = 0.0;
    bool infinite = false;
    CalibMethod method = CalibMethod::Numeric;
    std::optional<CalibrationWitness> certificate;
    std::size_t feasible_samples = 0;  // populated by the sampled method

    static CalibrationValue finite(double v, CalibMethod m) { return {v, false, m, {}, 0}; }
    static CalibrationValue infinity(CalibMethod m) { return {0.0, true, m, {}, 0}; }
};

struct LowerBoundPair {
    CalibrationValue tight;   // eps^2 / (2k max ||P delta||^2)
    CalibrationValue crude;   // eps^2 / (4k)
};

/// Closed-form calibration value for the covered (loss, subspace) pairs;
/// UnsupportedError otherwise. Epsilon beyond l_max gives +infinity.
CalibrationValue exact_calibration(const CalibrationQuery& query);

/// Both subspace-projection lower bounds. Requires colspace(L) inside the
/// subspace (HypothesisError otherwise).
LowerBoundPair lower_bound(const CalibrationQuery& query);

/// eps^2/(2k) for unconstrained scores and pseudometric losses with
/// eps <= l_max; HypothesisError when a hypothesis fails.
CalibrationValue upper_bound(const CalibrationQuery& query);

/// max over i != j of ||P (e_i - e_j)||^2, closed forms per subspace kind.
double max_projected_pair_norm(const ScoreSubspace& s);

/// Calibration restricted to points where label i beats the prediction j by
/// at least epsilon; +infinity when the program is infeasible. `scale`
/// multiplies the surrogate objective.
CalibrationValue pair_calibration(std::size_t i, std::size_t j, const CalibrationQuery& query,
                                  double scale = 1.0);

/// Minimum of pair_calibration over predictable ordered pairs, with
/// symmetry pruning for built-in losses. Guarded by k <= 256.
CalibrationValue numeric_calibration(const CalibrationQuery& query, double scale = 1.0);

/// Monte-Carlo upper bound: best objective over random feasible (theta, q).
CalibrationValue sampled_upper_bound(const CalibrationQuery& query, std::size_t samples,
                                     unsigned seed);

/// Greatest convex nondecreasing minorant on the grid. Infinite cells form
/// a tail and stay infinite in the output.
std::vector<CalibrationValue> convex_envelope(const Vector& epsilons,
                                              const std::vector<CalibrationValue>& values);

struct SweepMethods {
    bool exact = true;
    bool numeric = true;
    bool bounds = true;
    bool sampled = false;
};

struct SweepOptions {
    SweepMethods methods;
    std::size_t samples = 10000;
    unsigned seed = 1;
    unsigned threads = 0;  // 0 = hardware default, capped by CALIB_THREADS
};

struct CurvePoint {
    double epsilon = 0.0;
    std::optional<CalibrationValue> exact;
    std::optional<CalibrationValue> numeric;
    std::optional<CalibrationValue> lower_tight;
    std::optional<CalibrationValue> lower_crude;
    std::optional<CalibrationValue> upper;
    std::optional<CalibrationValue> sampled;
    std::optional<CalibrationValue> envelope;
    std::string error;
};

struct CalibrationCurve {
    std::vector<CurvePoint> points;
};

/// Per-epsilon values for the requested methods plus the envelope of the
/// preferred method (exact when available, numeric otherwise). Point-level
/// failures mark the cell's error field; the sweep continues.
CalibrationCurve sweep(const TaskLoss& loss, const ScoreSubspace& subspace, const Vector& grid,
                       const SweepOptions& options);

} // namespace calib
