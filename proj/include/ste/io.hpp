#pragma once

#include "ste/estimator.hpp"
#include "ste/harness.hpp"
#include "ste/synth.hpp"

#include <string>

namespace ste {

/// Parse a versioned JSON scenario config. Angles are degrees at this
/// boundary, radians internally. The layout accepts either m1/m2 or
/// explicit d1/d2 spacings. Throws InvalidArgument with a field-path
/// message on schema violations.
Scenario scenario_from_json(const std::string& text);

/// Resolved-scenario echo (wavelengths filled in, angles back in degrees).
std::string scenario_to_json(const Scenario& scenario);

std::string estimation_result_to_json(const EstimationResult& result);
std::string error_to_json(const Error& err);
std::string sweep_spec_to_json(const SweepSpec& spec);

/// Snapshot matrix as CSV: one row per antenna, a header row, and
/// re/im-interleaved columns.
std::string snapshots_to_csv(const Eigen::Ref<const CMat>& y);
CMat snapshots_from_csv(const std::string& text);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& contents);

}  // namespace ste
