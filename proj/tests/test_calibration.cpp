#include <cmath>

#include <doctest.h>

#include "calib/calibration.hpp"
#include "calib/surrogate.hpp"

using namespace calib;

TEST_CASE("closed-form calibration values") {
    const TaskLoss l01 = zero_one_loss(5);
    const ScoreSubspace full5 = score_subspace(l01, SubspaceMode::Unconstrained);
    CHECK(exact_calibration({l01, full5, 1.0}).value == doctest::Approx(0.05));

    const TaskLoss lb4 = block_zero_one_loss({2, 2, 2, 2}).first;
    const ScoreSubspace tb4 = score_subspace(lb4, SubspaceMode::Tight);
    CHECK(exact_calibration({lb4, tb4, 0.8}).value == doctest::Approx(0.04));

    const TaskLoss lh5 = hamming_loss(5, true);
    const ScoreSubspace th5 = score_subspace(lh5, SubspaceMode::Tight);
    CHECK(exact_calibration({lh5, th5, 1.0}).value == doctest::Approx(0.025));

    const TaskLoss lb13 = block_zero_one_loss({1, 3}).first;
    const ScoreSubspace fb13 = score_subspace(lb13, SubspaceMode::Unconstrained);
    CHECK(exact_calibration({lb13, fb13, 1.0}).value == doctest::Approx(0.0625));

    const TaskLoss lm = mixed_loss({2, 2}, 0.4);
    const ScoreSubspace tm = score_subspace(lm, SubspaceMode::Tight);
    CHECK(exact_calibration({lm, tm, 0.1}).value == 0.0);
    CHECK(exact_calibration({lm, tm, 0.2}).value == 0.0);
    CHECK(exact_calibration({lm, tm, 0.5}).value > 0.0);

    CHECK(exact_calibration({l01, full5, 1.5}).infinite);

    TaskLoss custom;
    custom.kind = LossKind::Custom;
    custom.k = 2;
    custom.dense = Matrix::from_rows({{0, 1}, {1, 0}});
    custom.l_max = 1.0;
    const ScoreSubspace cs = custom_subspace(Matrix::identity(2));
    CHECK_THROWS_AS(exact_calibration({custom, cs, 0.5}), UnsupportedError);
}

TEST_CASE("projection lower bounds") {
    const TaskLoss l01 = zero_one_loss(4);
    const ScoreSubspace full = score_subspace(l01, SubspaceMode::Unconstrained);
    const LowerBoundPair lb = lower_bound({l01, full, 1.0});
    CHECK(lb.tight.value == doctest::Approx(0.0625));
    CHECK(lb.crude.value == doctest::Approx(0.0625));

    const TaskLoss lb22 = block_zero_one_loss({2, 2}).first;
    const ScoreSubspace t22 = score_subspace(lb22, SubspaceMode::Tight);
    const LowerBoundPair b22 = lower_bound({lb22, t22, 1.0});
    CHECK(b22.tight.value == doctest::Approx(0.125));
    CHECK(b22.tight.value >= b22.crude.value - 1e-15);

    const TaskLoss lh3 = hamming_loss(3, true);
    const ScoreSubspace th3 = score_subspace(lh3, SubspaceMode::Tight);
    CHECK(lower_bound({lh3, th3, 1.0}).tight.value == doctest::Approx(1.0 / 24));

    const TaskLoss lm = mixed_loss({2, 2}, 0.4);
    const ScoreSubspace tm = score_subspace(lm, SubspaceMode::Tight);
    CHECK_THROWS_AS(lower_bound({lm, tm, 0.5}), HypothesisError);
}

TEST_CASE("unconstrained pseudometric upper bound") {
    const TaskLoss l01 = zero_one_loss(4);
    const ScoreSubspace full = score_subspace(l01, SubspaceMode::Unconstrained);
    CHECK(upper_bound({l01, full, 1.0}).value == doctest::Approx(0.125));

    const TaskLoss lh2 = hamming_loss(2, true);
    const ScoreSubspace fh2 = score_subspace(lh2, SubspaceMode::Unconstrained);
    CHECK(upper_bound({lh2, fh2, 0.5}).value == doctest::Approx(0.03125));

    TaskLoss bad;
    bad.kind = LossKind::Custom;
    bad.k = 2;
    bad.dense = Matrix::from_rows({{0, 1}, {3, 0}});
    bad.l_max = 3.0;
    const ScoreSubspace cs = score_subspace(zero_one_loss(2), SubspaceMode::Unconstrained);
    CHECK_THROWS_AS(upper_bound({bad, cs, 0.5}), HypothesisError);

    const ScoreSubspace tight22 =
        score_subspace(block_zero_one_loss({2, 2}).first, SubspaceMode::Tight);
    CHECK_THROWS_AS(upper_bound({block_zero_one_loss({2, 2}).first, tight22, 0.5}),
                    HypothesisError);
}

TEST_CASE("maximum projected pair norms") {
    const ScoreSubspace full = score_subspace(zero_one_loss(6), SubspaceMode::Unconstrained);
    CHECK(max_projected_pair_norm(full) == doctest::Approx(2.0));

    const TaskLoss lh3 = hamming_loss(3, true);
    CHECK(max_projected_pair_norm(score_subspace(lh3, SubspaceMode::Tight)) ==
          doctest::Approx(1.5));

    const TaskLoss lh4 = hamming_loss(4, true);
    const ScoreSubspace th4 = score_subspace(lh4, SubspaceMode::Tight);
    const ScoreSubspace brute = custom_subspace(th4.f);
    CHECK(std::abs(max_projected_pair_norm(th4) - max_projected_pair_norm(brute)) <= 1e-10);

    const ScoreSubspace t13 =
        score_subspace(block_zero_one_loss({1, 3}).first, SubspaceMode::Tight);
    CHECK(max_projected_pair_norm(t13) == doctest::Approx(1.0 + 1.0 / 3.0));
}

TEST_CASE("pair programs") {
    const TaskLoss l3 = zero_one_loss(3);
    const ScoreSubspace full3 = score_subspace(l3, SubspaceMode::Unconstrained);
    for (auto [i, j] : std::vector<std::pair<std::size_t, std::size_t>>{{0, 1}, {2, 0}, {1, 2}}) {
        const CalibrationValue v = pair_calibration(i, j, {l3, full3, 0.5});
        REQUIRE_FALSE(v.infinite);
        CHECK(v.value == doctest::Approx(0.25 / 12).epsilon(1e-4));
    }

    const TaskLoss lm = mixed_loss({2, 2}, 0.4);
    const ScoreSubspace tm = score_subspace(lm, SubspaceMode::Tight);
    const CalibrationValue flat = pair_calibration(0, 2, {lm, tm, 0.1});
    REQUIRE_FALSE(flat.infinite);
    CHECK(flat.value <= 1e-7);

    CHECK(pair_calibration(0, 1, {l3, full3, 1.2}).infinite);
    CHECK_THROWS_AS(pair_calibration(1, 1, {l3, full3, 0.5}), InvalidInputError);
    CHECK_THROWS_AS(pair_calibration(0, 1, {lm, tm, 0.5}), InvalidInputError);
}

TEST_CASE("numeric calibration matches closed forms on spot checks") {
    const TaskLoss l3 = zero_one_loss(3);
    const ScoreSubspace full3 = score_subspace(l3, SubspaceMode::Unconstrained);
    for (double eps = 0.1; eps <= 1.0 + 1e-9; eps += 0.1) {
        const CalibrationValue v = numeric_calibration({l3, full3, eps});
        REQUIRE_FALSE(v.infinite);
        CHECK(std::abs(v.value - eps * eps / 12.0) <= 1e-5);
    }

    const TaskLoss lh3 = hamming_loss(3, true);
    const ScoreSubspace th3 = score_subspace(lh3, SubspaceMode::Tight);
    const CalibrationValue vh = numeric_calibration({lh3, th3, 0.5});
    CHECK(std::abs(vh.value - 0.25 / 24.0) <= 1e-5);

    const TaskLoss lm = mixed_loss({2, 2}, 0.4);
    const ScoreSubspace fm = score_subspace(lm, SubspaceMode::Unconstrained);
    const CalibrationValue vm = numeric_calibration({lm, fm, 0.9});
    const CalibrationValue em = exact_calibration({lm, fm, 0.9});
    CHECK(std::abs(vm.value - em.value) <= 1e-5);
}

TEST_CASE("numeric witnesses are feasible and reproduce their value") {
    const TaskLoss loss = block_zero_one_loss({2, 2}).first;
    for (const SubspaceMode mode : {SubspaceMode::Unconstrained, SubspaceMode::Tight}) {
        const ScoreSubspace s = score_subspace(loss, mode);
        for (double eps : {0.2, 0.5, 0.8}) {
            const CalibrationValue v = numeric_calibration({loss, s, eps});
            REQUIRE_FALSE(v.infinite);
            REQUIRE(v.certificate.has_value());
            const CondDist q = CondDist::from_dense(v.certificate->q);
            const double dphi = excess_quadratic_surrogate(v.certificate->theta, q, loss, s);
            CHECK(std::abs(dphi - v.value) <= 1e-7);
            // The witness's expected-loss gap meets the target up to solver slack.
            const Vector ell = expected_loss_vector(loss, q);
            double best = 1e300, worst = -1e300;
            for (std::size_t c : s.predictable) {
                best = std::min(best, ell[c]);
                worst = std::max(worst, ell[c]);
            }
            CHECK(worst - best >= eps - 1e-7);
        }
    }
}

TEST_CASE("numeric calibration is monotone in epsilon") {
    const TaskLoss loss = mixed_loss({2, 2}, 0.4);
    const ScoreSubspace s = score_subspace(loss, SubspaceMode::Tight);
    double prev = -1.0;
    for (double eps : {0.1, 0.3, 0.5, 0.7, 0.9}) {
        const CalibrationValue v = numeric_calibration({loss, s, eps});
        REQUIRE_FALSE(v.infinite);
        CHECK(v.value >= prev - 1e-7);
        prev = v.value;
    }
}

TEST_CASE("scaling the surrogate scales the calibration function") {
    const TaskLoss loss = zero_one_loss(4);
    const ScoreSubspace s = score_subspace(loss, SubspaceMode::Unconstrained);
    for (double eps : {0.3, 0.7}) {
        const double one = numeric_calibration({loss, s, eps}, 1.0).value;
        const double three = numeric_calibration({loss, s, eps}, 3.0).value;
        CHECK(std::abs(three - 3.0 * one) <= 1e-7);
    }
}

TEST_CASE("sampled upper bound") {
    const TaskLoss l3 = zero_one_loss(3);
    const ScoreSubspace full3 = score_subspace(l3, SubspaceMode::Unconstrained);
    const double h = 0.25 / 12.0;
    const CalibrationValue v = sampled_upper_bound({l3, full3, 0.5}, 20000, 5);
    REQUIRE_FALSE(v.infinite);
    CHECK(v.feasible_samples > 0);
    CHECK(v.value >= h - 1e-7);

    const CalibrationValue inf = sampled_upper_bound({l3, full3, 1.5}, 2000, 5);
    CHECK(inf.infinite);
    CHECK(inf.feasible_samples == 0);
}

TEST_CASE("the adversarial two-point distribution attains the 0-1 value") {
    const std::size_t k = 4;
    const TaskLoss loss = zero_one_loss(k);
    const ScoreSubspace s = score_subspace(loss, SubspaceMode::Unconstrained);
    for (double eps : {0.2, 0.5, 0.8}) {
        Vector q(k, 0.0);
        q[0] = 0.5 + eps / 2.0;
        q[1] = 0.5 - eps / 2.0;
        Vector theta(k, -1.0);
        theta[0] = theta[1] = -0.5;
        const double dphi =
            excess_quadratic_surrogate(theta, CondDist::from_dense(q), loss, s);
        CHECK(dphi == doctest::Approx(eps * eps / (4.0 * k)).epsilon(1e-12));
    }
}

TEST_CASE("convex envelope") {
    const Vector eps = {0.0, 0.25, 0.5, 0.75, 1.0};
    std::vector<CalibrationValue> quad;
    for (double e : eps) quad.push_back(CalibrationValue::finite(e * e, CalibMethod::Exact));
    const auto env = convex_envelope(eps, quad);
    for (std::size_t i = 0; i < eps.size(); ++i)
        CHECK(env[i].value == doctest::Approx(quad[i].value).epsilon(1e-12));

    // A zero plateau followed by a quadratic stays unchanged.
    const TaskLoss lm = mixed_loss({2, 2}, 0.4);
    const ScoreSubspace tm = score_subspace(lm, SubspaceMode::Tight);
    Vector grid;
    std::vector<CalibrationValue> vals;
    for (double e = 0.0; e <= 1.0 + 1e-9; e += 0.05) {
        grid.push_back(e);
        vals.push_back(exact_calibration({lm, tm, e}));
    }
    const auto env2 = convex_envelope(grid, vals);
    for (std::size_t i = 0; i < grid.size(); ++i)
        CHECK(std::abs(env2[i].value - vals[i].value) <= 1e-12);

    // A spurious dip is flattened away, never raised.
    std::vector<CalibrationValue> dip;
    const Vector eps3 = {0.0, 0.5, 1.0};
    dip.push_back(CalibrationValue::finite(0.0, CalibMethod::Numeric));
    dip.push_back(CalibrationValue::finite(0.4, CalibMethod::Numeric));
    dip.push_back(CalibrationValue::finite(0.3, CalibMethod::Numeric));
    const auto env3 = convex_envelope(eps3, dip);
    CHECK(env3[1].value <= 0.3 + 1e-12);
    for (std::size_t i = 0; i < 3; ++i) CHECK(env3[i].value <= dip[i].value + 1e-12);
    CHECK(env3[0].value <= env3[1].value + 1e-12);
    CHECK(env3[1].value <= env3[2].value + 1e-12);
}

TEST_CASE("sweeps assemble per-method columns") {
    const TaskLoss lm = mixed_loss({2, 2}, 0.4);
    const ScoreSubspace tm = score_subspace(lm, SubspaceMode::Tight);
    SweepOptions opts;
    const Vector grid = {0.0, 0.1, 0.2, 0.4, 0.8};
    const CalibrationCurve curve = sweep(lm, tm, grid, opts);
    REQUIRE(curve.points.size() == 5);
    for (const CurvePoint& pt : curve.points) {
        REQUIRE(pt.exact.has_value());
        REQUIRE(pt.numeric.has_value());
        CHECK_FALSE(pt.lower_tight.has_value());  // hypothesis fails for mixed/tight
        CHECK(std::abs(pt.exact->value - pt.numeric->value) <= 1e-5);
    }
    CHECK(curve.points[1].exact->value == 0.0);
    CHECK(curve.points[4].exact->value > 0.0);

    const CalibrationCurve empty = sweep(lm, tm, {}, opts);
    CHECK(empty.points.empty());

    // For separable-score constraints the exact curve dominates the
    // unconstrained upper bound once 4T <= 2^T.
    for (unsigned t : {4u, 5u, 6u}) {
        const TaskLoss lh = hamming_loss(t, true);
        const ScoreSubspace th = score_subspace(lh, SubspaceMode::Tight);
        const double k = static_cast<double>(lh.k);
        for (double e : {0.25, 0.5, 1.0}) {
            const double tight = exact_calibration({lh, th, e}).value;
            CHECK(tight >= e * e / (2.0 * k) - 1e-12);
        }
    }
}
