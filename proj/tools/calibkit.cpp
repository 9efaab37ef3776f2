#include <cmath>
#include <cstdio>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "calib/calibration.hpp"
#include "calib/learning.hpp"
#include "calib/report.hpp"

namespace {

using namespace calib;

struct LossOptions {
    std::string kind = "zero-one";
    std::size_t k = 4;
    std::string sizes = "2,2";
    unsigned t = 3;
    double eta = 0.4;
    std::string csv;
};

std::vector<std::size_t> parse_sizes(const std::string& spec) {
    std::vector<std::size_t> sizes;
    std::stringstream ss(spec);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        const long v = std::stol(cell);
        if (v < 1) throw InvalidInputError("block sizes must be positive");
        sizes.push_back(static_cast<std::size_t>(v));
    }
    if (sizes.empty()) throw InvalidInputError("empty --sizes");
    return sizes;
}

Vector parse_grid(const std::string& spec) {
    double a = 0.0, b = 1.0, step = 0.05;
    if (std::sscanf(spec.c_str(), "%lf:%lf:%lf", &a, &b, &step) != 3 || step <= 0.0 || b < a)
        throw InvalidInputError("bad --eps-grid, expected a:b:step");
    Vector grid;
    for (double e = a; e <= b + 1e-12; e += step) grid.push_back(std::min(e, b));
    return grid;
}

TaskLoss build_loss(const LossOptions& lo) {
    if (lo.kind == "zero-one") return zero_one_loss(lo.k);
    if (lo.kind == "block") return block_zero_one_loss(parse_sizes(lo.sizes)).first;
    if (lo.kind == "hamming") return hamming_loss(lo.t, lo.t <= 14);
    if (lo.kind == "mixed") return mixed_loss(parse_sizes(lo.sizes), lo.eta);
    if (lo.kind == "custom-csv") {
        if (lo.csv.empty()) throw InvalidInputError("--loss custom-csv needs --csv FILE");
        return custom_loss_from_csv(lo.csv);
    }
    throw InvalidInputError("unknown --loss kind: " + lo.kind);
}

ScoreSubspace build_subspace(const TaskLoss& loss, const std::string& mode) {
    if (mode == "unconstrained") return score_subspace(loss, SubspaceMode::Unconstrained);
    if (mode == "tight") return score_subspace(loss, SubspaceMode::Tight);
    throw InvalidInputError("unknown --subspace: " + mode);
}

void add_loss_flags(CLI::App* cmd, LossOptions& lo) {
    cmd->add_option("--loss", lo.kind, "zero-one|block|hamming|mixed|custom-csv");
    cmd->add_option("--k", lo.k, "label count (zero-one)");
    cmd->add_option("--sizes", lo.sizes, "comma-separated block sizes");
    cmd->add_option("--t", lo.t, "Hamming bit count");
    cmd->add_option("--eta", lo.eta, "mixing weight in [0,1]");
    cmd->add_option("--csv", lo.csv, "dense loss matrix file (custom-csv)");
}

int run_loss_show(const LossOptions& lo, const std::string& subspace_mode) {
    const TaskLoss loss = build_loss(lo);
    const ScoreSubspace sub = build_subspace(loss, subspace_mode);
    const std::size_t loss_rank = svd(loss.require_dense()).rank();
    std::cout << "k = " << loss.k << "\n"
              << "l_max = " << loss.l_max << "\n"
              << "loss rank = " << loss_rank << "\n"
              << "pseudometric = " << (is_pseudometric(loss) ? "true" : "false") << "\n"
              << "subspace rank = " << sub.factors.rank() << "\n"
              << "kappa(F) = " << sub.factors.sigma_max() / sub.factors.sigma_min() << "\n";
    if (loss.k <= 16) {
        const Matrix& m = loss.require_dense();
        for (std::size_t i = 0; i < loss.k; ++i) {
            for (std::size_t j = 0; j < loss.k; ++j)
                std::printf("%7.4f%s", m(i, j), j + 1 == loss.k ? "\n" : " ");
        }
    }
    return 0;
}

SweepMethods parse_methods(const std::string& spec, bool& sampled) {
    SweepMethods m{false, false, false, false};
    std::stringstream ss(spec);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        if (cell == "exact") m.exact = true;
        else if (cell == "numeric") m.numeric = true;
        else if (cell == "bounds") m.bounds = true;
        else if (cell == "sampled") m.sampled = true;
        else throw InvalidInputError("unknown method: " + cell);
    }
    sampled = m.sampled;
    return m;
}

int run_calib(const LossOptions& lo, const std::string& subspace_mode, const std::string& grid,
              const std::string& methods, const std::string& out, std::size_t samples,
              unsigned seed) {
    const TaskLoss loss = build_loss(lo);
    if (loss.k > 256 && methods.find("numeric") != std::string::npos) {
        std::cerr << "numeric calibration is limited to k <= 256; "
                     "rerun with --methods exact,bounds\n";
        return 3;
    }
    const ScoreSubspace sub = build_subspace(loss, subspace_mode);
    SweepOptions opts;
    bool sampled = false;
    opts.methods = parse_methods(methods, sampled);
    opts.samples = samples;
    opts.seed = seed;
    const CalibrationCurve curve = sweep(loss, sub, parse_grid(grid), opts);
    const std::string csv = curve_to_csv(curve);
    std::cout << "# seed = " << seed << "\n" << csv;
    if (!out.empty()) write_text_atomic(out, csv);
    return 0;
}

int run_constants(const LossOptions& lo, const std::string& subspace_mode, double r_bound,
                  double q_bound, std::size_t n, double epsilon, const std::string& out) {
    const TaskLoss loss = build_loss(lo);
    const ScoreSubspace sub = build_subspace(loss, subspace_mode);
    const SgdConstants c = compute_constants(sub, loss.l_max, r_bound, q_bound, n);

    nlohmann::json j;
    j["D"] = c.d_bound;
    j["M"] = c.m_bound;
    j["DM"] = c.dm;
    j["gamma"] = c.step;
    j["n"] = n;
    j["kappa"] = sub.factors.sigma_max() / sub.factors.sigma_min();
    if (loss.kind == LossKind::Hamming)
        j["kappa_within_t_plus_2"] = j["kappa"].get<double>() <= *loss.t + 2 + 1e-9;

    if (epsilon > 0.0) {
        double h_value = -1.0;
        try {
            const CalibrationValue ex = exact_calibration({loss, sub, epsilon});
            if (!ex.infinite) h_value = ex.value;
        } catch (const UnsupportedError&) {
            Vector grid = parse_grid("0:1:0.05");
            grid.push_back(epsilon);
            std::sort(grid.begin(), grid.end());
            grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
            SweepOptions opts;
            opts.methods = SweepMethods{false, true, false, false};
            const CalibrationCurve curve = sweep(loss, sub, grid, opts);
            for (const CurvePoint& pt : curve.points)
                if (std::abs(pt.epsilon - epsilon) < 1e-12 && pt.envelope &&
                    !pt.envelope->infinite)
                    h_value = pt.envelope->value;
        }
        j["epsilon"] = epsilon;
        if (h_value <= 0.0) {
            const double level =
                loss.kind == LossKind::Mixed && sub.kind == SubspaceKind::BlockIndicator
                    ? *loss.eta / 2.0
                    : epsilon;
            std::ostringstream msg;
            msg << "not consistent at this epsilon (level " << level << ")";
            j["consistency"] = msg.str();
        } else {
            j["H"] = h_value;
            j["n_star"] = static_cast<std::uint64_t>(std::ceil(4.0 * c.dm * c.dm /
                                                               (h_value * h_value)));
            j["sufficient_n"] = iteration_bound(c, h_value);
        }
    }
    const std::string text = j.dump(2) + "\n";
    std::cout << text;
    if (!out.empty()) write_text_atomic(out, text);
    return 0;
}

int run_train(const LossOptions& lo, const std::string& subspace_mode, std::size_t n,
              std::size_t seeds, unsigned long seed0, std::size_t feature_dim,
              std::size_t pool_size, const std::string& out) {
    const TaskLoss loss = build_loss(lo);
    const ScoreSubspace sub = build_subspace(loss, subspace_mode);
    const auto [fm, cm] = make_generator(sub, loss, feature_dim, pool_size, seed0);
    const SgdConstants c =
        compute_constants(sub, loss.l_max, fm.r_bound, cm.q_bound, std::max<std::size_t>(n, 1));

    nlohmann::json runs = nlohmann::json::array();
    double mean_sub = 0.0;
    for (std::size_t s = 0; s < seeds; ++s) {
        const TrainResult res = asgd_train(fm, cm, loss, sub, c, n, seed0 + 1 + s);
        runs.push_back(nlohmann::json::parse(train_result_to_json(res, c)));
        mean_sub += res.suboptimality;
    }
    mean_sub /= seeds ? seeds : 1;
    const double bound = 2.0 * c.dm / std::sqrt(static_cast<double>(std::max<std::size_t>(n, 1)));
    nlohmann::json j;
    j["base_seed"] = seed0;
    j["runs"] = runs;
    j["mean_suboptimality"] = mean_sub;
    j["rate_bound"] = bound;
    j["bound_holds"] = mean_sub <= bound;
    const std::string text = j.dump(2) + "\n";
    if (!out.empty()) write_text_atomic(out, text);
    std::cout << "# seed = " << seed0 << "\n";
    std::cout << "mean suboptimality " << mean_sub << " vs 2DM/sqrt(N) " << bound << " => "
              << (mean_sub <= bound ? "PASS" : "FAIL") << "\n";
    if (out.empty()) std::cout << text;
    return 0;
}

int run_fig1(unsigned t, const std::string& sizes, double eta, const std::string& grid,
             const std::string& out_dir) {
    const Vector g = parse_grid(grid);
    write_text_atomic(out_dir + "/fig1a.csv", hamming_figure_csv(t, g));
    write_text_atomic(out_dir + "/fig1b.csv", mixed_figure_csv(parse_sizes(sizes), eta, g));
    std::cout << "wrote " << out_dir << "/fig1a.csv and " << out_dir << "/fig1b.csv\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"calibration functions for convex surrogates in structured prediction"};
    app.require_subcommand(1);

    LossOptions lo;
    std::string subspace_mode = "unconstrained";
    std::string grid = "0:1:0.05";
    std::string methods = "exact,numeric,bounds";
    std::string out;
    std::size_t samples = 10000;
    unsigned seed = 1;
    double r_bound = 1.0, q_bound = 1.0, epsilon = 0.0;
    std::size_t n = 10000, seeds = 20, feature_dim = 4, pool_size = 4;
    unsigned long seed0 = 1;
    unsigned fig_t = 5;
    std::string fig_sizes = "8,8";
    double fig_eta = 0.4;
    std::string out_dir = ".";

    CLI::App* show = app.add_subcommand("loss-show", "print loss and subspace facts");
    add_loss_flags(show, lo);
    show->add_option("--subspace", subspace_mode, "unconstrained|tight");

    CLI::App* calib_cmd = app.add_subcommand("calib", "calibration sweep to CSV");
    add_loss_flags(calib_cmd, lo);
    calib_cmd->add_option("--subspace", subspace_mode);
    calib_cmd->add_option("--eps-grid", grid, "a:b:step");
    calib_cmd->add_option("--methods", methods, "exact,numeric,bounds,sampled");
    calib_cmd->add_option("--out", out, "CSV output path");
    calib_cmd->add_option("--samples", samples);
    calib_cmd->add_option("--seed", seed);

    CLI::App* consts = app.add_subcommand("constants", "SGD complexity constants");
    add_loss_flags(consts, lo);
    consts->add_option("--subspace", subspace_mode);
    consts->add_option("--r-bound", r_bound);
    consts->add_option("--q-bound", q_bound);
    consts->add_option("--n", n);
    consts->add_option("--epsilon", epsilon, "target accuracy for the iteration bound");
    consts->add_option("--out", out);

    CLI::App* train = app.add_subcommand("train", "averaged projected SGD runs");
    add_loss_flags(train, lo);
    train->add_option("--subspace", subspace_mode);
    train->add_option("--n", n, "iterations per run");
    train->add_option("--seeds", seeds, "number of runs");
    train->add_option("--seed", seed0, "base seed");
    train->add_option("--d", feature_dim, "feature dimension");
    train->add_option("--pool", pool_size, "input pool size");
    train->add_option("--out", out, "JSON output path");

    CLI::App* fig1 = app.add_subcommand("fig1", "calibration figure data files");
    fig1->add_option("--t", fig_t, "Hamming bit count for file (a)");
    fig1->add_option("--sizes", fig_sizes, "block sizes for file (b)");
    fig1->add_option("--eta", fig_eta, "mixing weight for file (b)");
    fig1->add_option("--eps-grid", grid, "a:b:step");
    fig1->add_option("--out", out_dir, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return e.get_exit_code() == 0 ? 0 : 2;
    }

    try {
        if (show->parsed()) return run_loss_show(lo, subspace_mode);
        if (calib_cmd->parsed())
            return run_calib(lo, subspace_mode, grid, methods, out, samples, seed);
        if (consts->parsed())
            return run_constants(lo, subspace_mode, r_bound, q_bound, n, epsilon, out);
        if (train->parsed())
            return run_train(lo, subspace_mode, n, seeds, seed0, feature_dim, pool_size, out);
        if (fig1->parsed()) return run_fig1(fig_t, fig_sizes, fig_eta, grid, out_dir);
    } catch (const CapacityError& e) {
        std::cerr << "capacity: " << e.what() << "\n";
        return 3;
    } catch (const ConvergenceError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 4;
    } catch (const InvalidInputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::logic_error& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
