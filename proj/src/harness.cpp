#include "ste/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <sstream>

namespace ste {

double rmse(const std::vector<DirectionCosines>& estimates, const DirectionCosines& truth) {
    if (estimates.empty())
        throw Error(Errc::InvalidArgument, "rmse", "need at least one estimate");
    double acc = 0.0;
    for (const auto& e : estimates) {
        const double dx = e.u_x - truth.u_x;
        const double dy = e.u_y - truth.u_y;
        acc += dx * dx + dy * dy;
    }
    return std::sqrt(acc / static_cast<double>(estimates.size()));
}

Scenario scenario_at(const SweepSpec& spec, double grid_value) {
    Scenario s = spec.base;
    s.snapshots = spec.snapshots;
    if (spec.param == SweepParam::SnrDb) {
        s.snr_db = grid_value;
    } else {
        // Locked aperture ratio: d1 = d2 = grid_value, delta = grid_value / 2.
        s.layout = make_layout(s.layout.kind, grid_value / 2.0, grid_value / 2.0, 2, 2);
    }
    return s;
}

namespace {

// Minimal-total-squared-distance one-to-one matching, brute force over the
// at most six permutations of K <= 3 sources. Returns perm[truth] = estimate.
std::vector<int> match_to_truth(const std::vector<DirectionCosines>& est,
                                const std::vector<DirectionCosines>& truth) {
    const std::size_t k = truth.size();
    std::vector<int> idx(k);
    std::iota(idx.begin(), idx.end(), 0);
    std::vector<int> best = idx;
    double best_cost = std::numeric_limits<double>::infinity();
    std::sort(idx.begin(), idx.end());
    do {
        double cost = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            const double dx = est[static_cast<std::size_t>(idx[i])].u_x - truth[i].u_x;
            const double dy = est[static_cast<std::size_t>(idx[i])].u_y - truth[i].u_y;
            cost += dx * dx + dy * dy;
        }
        if (cost < best_cost) {
            best_cost = cost;
            best = idx;
        }
    } while (std::next_permutation(idx.begin(), idx.end()));
    return best;
}

}  // namespace

TrialReport run_sweep(const SweepSpec& spec) {
    if (spec.grid.empty()) throw Error(Errc::InvalidArgument, "run_sweep", "grid is empty");
    if (spec.trials < 1) throw Error(Errc::InvalidArgument, "run_sweep", "trials must be >= 1");

    TrialReport report;
    report.reserve(spec.grid.size());
    for (std::size_t gi = 0; gi < spec.grid.size(); ++gi) {
        const auto start = std::chrono::steady_clock::now();
        Scenario point = resolve_wavelengths(scenario_at(spec, spec.grid[gi]));
        const auto k = point.sources.size();

        std::vector<DirectionCosines> truth(k);
        for (std::size_t i = 0; i < k; ++i)
            truth[i] = direction_cosines(point.sources[i].params.theta1,
                                         point.sources[i].params.theta2);

        WavelengthMode mode = spec.mode;
        if (mode.kind == WavelengthMode::Kind::Known && mode.wavelengths.empty())
            mode.wavelengths = wavelengths_of(point);

        GridPointReport row;
        row.grid_value = spec.grid[gi];
        row.trials = spec.trials;
        row.seed = trial_seed(spec.master_seed, gi * static_cast<std::uint64_t>(spec.trials));

        double sq_final = 0.0, sq_coarse = 0.0, sq_fine = 0.0;
        long counted = 0;
        for (int t = 0; t < spec.trials; ++t) {
            Scenario trial = point;
            trial.seed = trial_seed(spec.master_seed,
                                    gi * static_cast<std::uint64_t>(spec.trials) +
                                        static_cast<std::uint64_t>(t));
            try {
                const SnapshotMatrix snap = generate(trial);
                const EstimationResult res =
                    run_pipeline(snap, static_cast<int>(k), mode);
                std::vector<DirectionCosines> final_u(k);
                for (std::size_t i = 0; i < k; ++i)
                    final_u[i] = {res.sources[i].u_x_final, res.sources[i].u_y_final};
                const std::vector<int> perm = match_to_truth(final_u, truth);
                for (std::size_t i = 0; i < k; ++i) {
                    const auto& src = res.sources[static_cast<std::size_t>(perm[i])];
                    const double fx = src.u_x_final - truth[i].u_x;
                    const double fy = src.u_y_final - truth[i].u_y;
                    const double cx = src.u_x_coarse - truth[i].u_x;
                    const double cy = src.u_y_coarse - truth[i].u_y;
                    const double gx = src.u_x_fine - truth[i].u_x;
                    const double gy = src.u_y_fine - truth[i].u_y;
                    sq_final += fx * fx + fy * fy;
                    sq_coarse += cx * cx + cy * cy;
                    sq_fine += gx * gx + gy * gy;
                }
                counted += static_cast<long>(k);
            } catch (const Error&) {
                ++row.failures;
            }
        }
        if (counted > 0) {
            row.rmse_final = std::sqrt(sq_final / static_cast<double>(counted));
            row.rmse_coarse = std::sqrt(sq_coarse / static_cast<double>(counted));
            row.rmse_fine = std::sqrt(sq_fine / static_cast<double>(counted));
        } else {
            row.rmse_final = row.rmse_coarse = row.rmse_fine =
                std::numeric_limits<double>::quiet_NaN();
        }
        row.wall_ms = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - start)
                          .count();
        report.push_back(row);
    }
    return report;
}

namespace {

std::string fmt12(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

}  // namespace

std::string export_csv(const TrialReport& report) {
    // Wall time is intentionally not exported: the file must be
    // byte-identical across runs with the same master seed.
    std::string out = "grid_value,rmse_final,rmse_coarse,rmse_fine,failures,trials,seed\n";
    for (const auto& row : report) {
        out += fmt12(row.grid_value);
        out += ',';
        out += fmt12(row.rmse_final);
        out += ',';
        out += fmt12(row.rmse_coarse);
        out += ',';
        out += fmt12(row.rmse_fine);
        out += ',';
        out += std::to_string(row.failures);
        out += ',';
        out += std::to_string(row.trials);
        out += ',';
        out += std::to_string(row.seed);
        out += '\n';
    }
    return out;
}

TrialReport parse_csv(const std::string& text) {
    constexpr const char* stage = "parse_csv";
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) ||
        line != "grid_value,rmse_final,rmse_coarse,rmse_fine,failures,trials,seed")
        throw Error(Errc::IoFailure, stage, "missing or unexpected header row");
    TrialReport report;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(row, cell, ',')) cells.push_back(cell);
        if (cells.size() != 7) throw Error(Errc::IoFailure, stage, "expected 7 columns");
        GridPointReport r;
        r.grid_value = std::stod(cells[0]);
        r.rmse_final = std::stod(cells[1]);
        r.rmse_coarse = std::stod(cells[2]);
        r.rmse_fine = std::stod(cells[3]);
        r.failures = std::stoi(cells[4]);
        r.trials = std::stoi(cells[5]);
        r.seed = std::stoull(cells[6]);
        report.push_back(r);
    }
    return report;
}

}  // namespace ste
