#include <cmath>
#include <random>

#include <doctest.h>

#include "calib/learning.hpp"

using namespace calib;

TEST_CASE("closed-form optimization constants") {
    const TaskLoss l01 = zero_one_loss(4);
    const ScoreSubspace full = score_subspace(l01, SubspaceMode::Unconstrained);
    const SgdConstants c = compute_constants(full, 1.0, 1.0, 1.0, 100);
    CHECK(c.d_bound == doctest::Approx(4.0));
    CHECK(c.m_bound == doctest::Approx(1.5));
    CHECK(c.dm == doctest::Approx(6.0));
    CHECK(c.step == doctest::Approx(2.0 * 4.0 / (1.5 * 10.0)));
    CHECK(c.n == 100);

    const TaskLoss lb = block_zero_one_loss({2, 2}).first;
    const ScoreSubspace tight = score_subspace(lb, SubspaceMode::Tight);
    const SgdConstants cb = compute_constants(tight, 1.0, 1.0, 1.0, 16);
    CHECK(cb.dm == doctest::Approx(2.0 + std::sqrt(2.0)));

    const TaskLoss lh = hamming_loss(2, true);
    const ScoreSubspace th = score_subspace(lh, SubspaceMode::Tight);
    const double kappa = th.factors.sigma_max() / th.factors.sigma_min();
    CHECK(kappa == doctest::Approx(2.0 + std::sqrt(3.0)));
    CHECK(kappa <= 4.0);
    CHECK(compute_constants(th, 1.0, 1.0, 1.0, 1).dm > 0.0);

    const ScoreSubspace degenerate = custom_subspace(Matrix::from_rows({{1, 0}, {1, 0}}));
    CHECK_THROWS_AS(compute_constants(degenerate, 1.0, 1.0, 1.0, 1), SingularSubspaceError);
}

TEST_CASE("sufficient iteration counts") {
    SgdConstants c;
    c.dm = 6.0;
    CHECK(iteration_bound(c, 0.015625) == 589825);
    CHECK_THROWS_AS(iteration_bound(c, 0.0), NotConsistentError);
    CHECK_THROWS_AS(iteration_bound(c, -0.5), NotConsistentError);

    SgdConstants big;
    big.dm = 1e12;
    CHECK_THROWS_AS(iteration_bound(big, 1e-9), CapacityError);

    SgdConstants twice;
    twice.dm = 12.0;
    CHECK(iteration_bound(twice, 0.015625) - 1 == 4 * (iteration_bound(c, 0.015625) - 1));
}

TEST_CASE("synthetic generators") {
    const TaskLoss loss = zero_one_loss(4);
    const ScoreSubspace s = score_subspace(loss, SubspaceMode::Unconstrained);

    const auto [fm1, cm1] = make_generator(s, loss, 3, 1, 5);
    CHECK(fm1.pool.size() == 1);
    CHECK(fm1.weights == Vector{1.0});
    CHECK(cm1.exact_fit);

    const auto [fm, cm] = make_generator(s, loss, 6, 4, 7);
    CHECK(fm.dim == 6);
    CHECK(fm.pool.size() == 4);
    CHECK(cm.exact_fit);
    CHECK(cm.q_bound > 0.0);
    for (const Vector& psi : fm.pool) {
        double n2 = 0.0;
        for (double v : psi) n2 += v * v;
        CHECK(std::sqrt(n2) <= fm.r_bound + 1e-12);
        const Vector q = cm.v * psi;
        double total = 0.0;
        for (double v : q) {
            CHECK(v >= -1e-9);
            total += v;
        }
        CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
    }

    const auto [fm_over, cm_over] = make_generator(s, loss, 2, 30, 9);
    CHECK(fm_over.pool.size() == 30);
    // 30 targets cannot generally be matched by a rank-2 map.
    CHECK_FALSE(cm_over.exact_fit);
}

TEST_CASE("frobenius ball projection") {
    const Matrix w = Matrix::from_rows({{3, 0}, {0, 4}});
    const Matrix inside = project_frobenius_ball(w, 10.0);
    CHECK(frobenius_norm(inside - w) <= 1e-15);
    const Matrix shrunk = project_frobenius_ball(w, 2.5);
    CHECK(frobenius_norm(shrunk) == doctest::Approx(2.5));
    CHECK(shrunk(0, 0) / shrunk(1, 1) == doctest::Approx(0.75));
}

TEST_CASE("pool risk evaluation") {
    const TaskLoss loss = zero_one_loss(4);
    const ScoreSubspace s = score_subspace(loss, SubspaceMode::Unconstrained);
    const auto [fm, cm] = make_generator(s, loss, 6, 4, 11);

    const Matrix zero(s.r, fm.dim, 0.0);
    const Risks at_zero = evaluate_risks(zero, fm, cm, loss, s);
    double expected_task = 0.0;
    for (std::size_t p = 0; p < fm.pool.size(); ++p) {
        const Vector q = cm.v * fm.pool[p];
        expected_task += fm.weights[p] * (1.0 - q[0]);
    }
    CHECK(at_zero.task == doctest::Approx(expected_task));
    CHECK(at_zero.task >= 0.0);
    CHECK(at_zero.task <= 1.0);

    const Matrix w_opt = optimal_linear_params(fm, cm, loss, s);
    const Risks best = evaluate_risks(w_opt, fm, cm, loss, s);
    CHECK(best.surrogate <= at_zero.surrogate + 1e-12);
    std::mt19937_64 rng(13);
    std::normal_distribution<double> gauss(0.0, 0.05);
    for (int it = 0; it < 20; ++it) {
        Matrix delta(w_opt.rows(), w_opt.cols(), 0.0);
        for (double& v : delta.data()) v = gauss(rng);
        const Risks perturbed = evaluate_risks(w_opt + delta, fm, cm, loss, s);
        CHECK(perturbed.surrogate >= best.surrogate - 1e-9);
    }
}

TEST_CASE("averaged sgd") {
    const TaskLoss loss = zero_one_loss(4);
    const ScoreSubspace s = score_subspace(loss, SubspaceMode::Unconstrained);
    const auto [fm, cm] = make_generator(s, loss, 4, 4, 17);
    const SgdConstants c = compute_constants(s, loss.l_max, fm.r_bound, cm.q_bound, 2000);

    const TrainResult empty = asgd_train(fm, cm, loss, s, c, 0, 1);
    CHECK(empty.iterations == 0);
    CHECK(frobenius_norm(empty.averaged_params) == 0.0);

    const TrainResult r = asgd_train(fm, cm, loss, s, c, 2000, 1);
    CHECK(r.iterations == 2000);
    CHECK(r.seed == 1);
    CHECK(frobenius_norm(r.averaged_params) <= c.d_bound + 1e-9);
    CHECK(r.suboptimality >= -1e-9);
    CHECK(r.suboptimality <= 2.0 * c.dm / std::sqrt(2000.0));
    REQUIRE_FALSE(r.trace.empty());
    CHECK(r.trace.back().first == 2000);

    const TrainResult again = asgd_train(fm, cm, loss, s, c, 2000, 1);
    CHECK(frobenius_norm(again.averaged_params - r.averaged_params) == 0.0);
    const TrainResult other = asgd_train(fm, cm, loss, s, c, 2000, 2);
    CHECK(frobenius_norm(other.averaged_params - r.averaged_params) > 0.0);
}
