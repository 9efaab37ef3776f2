#include "calib/report.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace calib {

namespace {

std::string cell(const std::optional<CalibrationValue>& v) {
    if (!v) return "";
    if (v->infinite) return "inf";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.12g", v->value);
    return buf;
}

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

} // namespace

std::string curve_to_csv(const CalibrationCurve& curve) {
    std::ostringstream out;
    out << "epsilon,exact,numeric,lower_tight,lower_crude,upper,envelope\n";
    for (const CurvePoint& pt : curve.points) {
        out << num(pt.epsilon) << ',' << cell(pt.exact) << ',' << cell(pt.numeric) << ','
            << cell(pt.lower_tight) << ',' << cell(pt.lower_crude) << ',' << cell(pt.upper)
            << ',' << cell(pt.envelope) << '\n';
    }
    return out.str();
}

std::string train_result_to_json(const TrainResult& result, const SgdConstants& constants) {
    nlohmann::json j;
    j["seed"] = result.seed;
    j["n"] = result.iterations;
    j["D"] = constants.d_bound;
    j["M"] = constants.m_bound;
    j["gamma"] = constants.step;
    j["surrogate_risk"] = result.surrogate_risk;
    j["task_risk"] = result.task_risk;
    j["suboptimality"] = result.suboptimality;
    nlohmann::json trace = nlohmann::json::array();
    for (const auto& [t, sub] : result.trace) trace.push_back({t, sub});
    j["trace"] = trace;
    return j.dump(2);
}

std::string hamming_figure_csv(unsigned t, const Vector& grid) {
    const TaskLoss loss = hamming_loss(t, t <= 14);
    const ScoreSubspace tight = score_subspace(loss, SubspaceMode::Tight);
    std::ostringstream out;
    out << "epsilon,tight_exact,unconstrained_lower,unconstrained_upper\n";
    for (double eps : grid) {
        const CalibrationValue ex = exact_calibration({loss, tight, eps});
        const double k = static_cast<double>(loss.k);
        out << num(eps) << ',' << (ex.infinite ? "inf" : num(ex.value)) << ','
            << num(eps * eps / (4.0 * k)) << ',' << num(eps * eps / (2.0 * k)) << '\n';
    }
    return out.str();
}

std::string mixed_figure_csv(const std::vector<std::size_t>& sizes, double eta,
                             const Vector& grid) {
    const TaskLoss loss = mixed_loss(sizes, eta);
    const ScoreSubspace tight = score_subspace(loss, SubspaceMode::Tight);
    const ScoreSubspace full = score_subspace(loss, SubspaceMode::Unconstrained);
    std::ostringstream out;
    out << "epsilon,tight_exact,unconstrained_exact\n";
    for (double eps : grid) {
        const CalibrationValue t_ex = exact_calibration({loss, tight, eps});
        const CalibrationValue u_ex = exact_calibration({loss, full, eps});
        out << num(eps) << ',' << (t_ex.infinite ? "inf" : num(t_ex.value)) << ','
            << (u_ex.infinite ? "inf" : num(u_ex.value)) << '\n';
    }
    return out.str();
}

void write_text_atomic(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw InvalidInputError("cannot write file: " + tmp.string());
        out << content;
    }
    fs::rename(tmp, target);
}

} // namespace calib
