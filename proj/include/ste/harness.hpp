#pragma once

#include "ste/estimator.hpp"
#include "ste/synth.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace ste {

enum class SweepParam { SnrDb, SpacingScale };

/// Monte Carlo sweep over SNR or over the locked-ratio spacing scale
/// (grid values are d1/lambda with d1 = d2 = 2*delta_x = 2*delta_y).
struct SweepSpec {
    Scenario base;
    SweepParam param = SweepParam::SnrDb;
    std::vector<double> grid;
    int trials = 200;
    int snapshots = 100;
    std::uint64_t master_seed = 0;
    WavelengthMode mode = WavelengthMode::known({});  // empty = true wavelengths
};

struct GridPointReport {
    double grid_value = 0.0;
    double rmse_final = 0.0;
    double rmse_coarse = 0.0;
    double rmse_fine = 0.0;
    int failures = 0;
    int trials = 0;
    std::uint64_t seed = 0;
    double wall_ms = 0.0;
};

using TrialReport = std::vector<GridPointReport>;

/// Direction-cosine root mean square error over independent runs:
/// sqrt( mean[ (u_x_hat - u_x)^2 + (u_y_hat - u_y)^2 ] ).
double rmse(const std::vector<DirectionCosines>& estimates, const DirectionCosines& truth);

/// Scenario at one grid value of the sweep.
Scenario scenario_at(const SweepSpec& spec, double grid_value);

/// Runs `trials` generate -> pipeline executions per grid value with
/// derived seeds. Estimates are matched to truths by the one-to-one
/// assignment minimizing total squared direction-cosine distance; failed
/// trials are counted and excluded from the RMSE.
TrialReport run_sweep(const SweepSpec& spec);

/// CSV with a header row and one row per grid point, 12 significant digits.
std::string export_csv(const TrialReport& report);

/// Inverse of export_csv (header required).
TrialReport parse_csv(const std::string& text);

}  // namespace ste
