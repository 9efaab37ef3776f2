#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include <doctest.h>

namespace {

struct RunResult {
    int code = -1;
    std::string output;
};

RunResult run_cli(const std::string& args) {
    const std::string out_path = "cli_stdout.tmp";
    const std::string cmd =
        std::string(CALIBKIT_CLI_PATH) + " " + args + " > " + out_path + " 2>&1";
    const int raw = std::system(cmd.c_str());
    RunResult r;
    r.code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    std::ifstream in(out_path);
    std::stringstream ss;
    ss << in.rdbuf();
    r.output = ss.str();
    std::remove(out_path.c_str());
    return r;
}

std::size_t count_lines(const std::string& text) {
    std::size_t n = 0;
    for (char c : text)
        if (c == '\n') ++n;
    return n;
}

} // namespace

TEST_CASE("cli: loss-show") {
    const RunResult h = run_cli("loss-show --loss hamming --t 3 --subspace tight");
    CHECK(h.code == 0);
    CHECK(h.output.find("k = 8") != std::string::npos);
    CHECK(h.output.find("loss rank = 4") != std::string::npos);
    CHECK(h.output.find("pseudometric = true") != std::string::npos);
    CHECK(h.output.find("subspace rank = 4") != std::string::npos);

    const RunResult b = run_cli("loss-show --loss block --sizes 2,2");
    CHECK(b.code == 0);
    CHECK(b.output.find("loss rank = 2") != std::string::npos);
}

TEST_CASE("cli: usage errors exit with 2") {
    CHECK(run_cli("loss-show --loss zero-one --k 1").code == 2);
    CHECK(run_cli("loss-show --loss nonsense").code == 2);
    CHECK(run_cli("calib --eps-grid backwards").code == 2);
    CHECK(run_cli("bogus-subcommand").code == 2);
    CHECK(run_cli("--help").code == 0);
}

TEST_CASE("cli: calibration sweep output") {
    const RunResult r =
        run_cli("calib --loss hamming --t 3 --subspace tight --eps-grid 0:1:0.05");
    REQUIRE(r.code == 0);
    // comment line + header + 21 grid rows
    CHECK(count_lines(r.output) == 23);
    CHECK(r.output.find("epsilon,exact,numeric") != std::string::npos);

    std::istringstream lines(r.output);
    std::string line;
    std::getline(lines, line);  // seed comment
    std::getline(lines, line);  // header
    while (std::getline(lines, line)) {
        std::istringstream cells(line);
        std::string eps_cell, exact_cell;
        std::getline(cells, eps_cell, ',');
        std::getline(cells, exact_cell, ',');
        const double eps = std::stod(eps_cell);
        const double exact = std::stod(exact_cell);
        CHECK(std::abs(exact - eps * eps / 24.0) <= 1e-9);
    }
}

TEST_CASE("cli: numeric method rejects large label spaces") {
    const RunResult r = run_cli("calib --loss hamming --t 15 --methods exact,numeric");
    CHECK(r.code == 3);
    CHECK(r.output.find("k <= 256") != std::string::npos);
}

TEST_CASE("cli: sweep output is deterministic") {
    const std::string args =
        "calib --loss mixed --sizes 2,2 --eta 0.4 --subspace tight --eps-grid 0:1:0.1 "
        "--methods exact,numeric,sampled --samples 500 --seed 9";
    const RunResult a = run_cli(args);
    const RunResult b = run_cli(args);
    REQUIRE(a.code == 0);
    CHECK(a.output == b.output);
}

TEST_CASE("cli: constants") {
    const RunResult r = run_cli(
        "constants --loss zero-one --k 4 --r-bound 1 --q-bound 1 --n 100 --epsilon 0.5");
    REQUIRE(r.code == 0);
    CHECK(r.output.find("\"DM\": 6.0") != std::string::npos);
    CHECK(r.output.find("\"H\": 0.015625") != std::string::npos);
    CHECK(r.output.find("\"n_star\": 589824") != std::string::npos);
    CHECK(r.output.find("\"sufficient_n\": 589825") != std::string::npos);

    const RunResult flat = run_cli(
        "constants --loss mixed --sizes 2,2 --eta 0.4 --subspace tight --epsilon 0.1");
    REQUIRE(flat.code == 0);
    CHECK(flat.output.find("not consistent at this epsilon") != std::string::npos);

    const RunResult ham = run_cli("constants --loss hamming --t 2 --subspace tight");
    REQUIRE(ham.code == 0);
    CHECK(ham.output.find("\"kappa_within_t_plus_2\": true") != std::string::npos);
}

TEST_CASE("cli: train is deterministic and reports the rate check") {
    const std::string args =
        "train --loss zero-one --k 4 --n 400 --seeds 3 --seed 5 --d 4 --pool 4";
    const RunResult a = run_cli(args);
    const RunResult b = run_cli(args);
    REQUIRE(a.code == 0);
    CHECK(a.output == b.output);
    CHECK(a.output.find("mean suboptimality") != std::string::npos);
    CHECK(a.output.find("=> PASS") != std::string::npos);
}

TEST_CASE("cli: figure files") {
    const RunResult r = run_cli("fig1 --t 4 --sizes 4,4 --eta 0.4 --eps-grid 0:1:0.25 --out .");
    REQUIRE(r.code == 0);
    for (const std::string name : {"fig1a.csv", "fig1b.csv"}) {
        std::ifstream f(name);
        REQUIRE(f.good());
        std::string header;
        std::getline(f, header);
        CHECK(header.find("epsilon,") == 0);
        std::size_t rows = 0;
        std::string line;
        while (std::getline(f, line))
            if (!line.empty()) ++rows;
        CHECK(rows == 5);
        std::remove(name.c_str());
    }
}
