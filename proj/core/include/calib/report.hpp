#pragma once

#include <string>

#include "calib/calibration.hpp"
#include "calib/learning.hpp"

namespace calib {

/// CSV with columns epsilon, exact, numeric, lower_tight, lower_crude,
/// upper, envelope. Missing methods leave empty cells; +infinity prints as
/// "inf".
std::string curve_to_csv(const CalibrationCurve& curve);

std::string train_result_to_json(const TrainResult& result, const SgdConstants& constants);

/// Figure data: tight closed form for the Hamming loss next to the
/// unconstrained lower/upper sandwich.
std::string hamming_figure_csv(unsigned t, const Vector& grid);

/// Figure data: tight and unconstrained closed forms for the mixed loss.
std::string mixed_figure_csv(const std::vector<std::size_t>& sizes, double eta,
                             const Vector& grid);

/// Write via a temporary file in the same directory, then rename.
void write_text_atomic(const std::string& path, const std::string& content);

} // namespace calib
