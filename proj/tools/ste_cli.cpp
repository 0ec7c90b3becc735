// Command-line front end: scenario simulation, single-shot estimation,
// Monte Carlo sweeps, and a built-in selftest.
//
// Exit codes: 0 ok, 1 I/O failure, 2 validation failure, 3 estimation failure.

#include "ste/estimator.hpp"
#include "ste/harness.hpp"
#include "ste/io.hpp"
#include "ste/selftest.hpp"
#include "ste/synth.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitIo = 1;
constexpr int kExitValidation = 2;
constexpr int kExitEstimation = 3;

int exit_code_for(const ste::Error& err) {
    return err.code() == ste::Errc::IoFailure ? kExitIo : kExitValidation;
}

std::string sidecar_path(const std::string& csv_path) {
    const auto dot = csv_path.rfind('.');
    if (dot == std::string::npos) return csv_path + ".json";
    return csv_path.substr(0, dot) + ".json";
}

int cmd_simulate(const std::string& config_path, const std::string& out_path,
                 std::optional<std::uint64_t> seed) {
    ste::Scenario scenario = ste::scenario_from_json(ste::read_file(config_path));
    if (seed) scenario.seed = *seed;
    const ste::SnapshotMatrix snap = ste::generate(scenario);
    ste::write_file(out_path, ste::snapshots_to_csv(snap.y));
    ste::write_file(sidecar_path(out_path), ste::scenario_to_json(snap.scenario));
    std::cerr << "wrote " << snap.y.rows() << "x" << snap.y.cols() << " snapshots to " << out_path
              << " (metadata " << sidecar_path(out_path) << ")\n";
    return kExitOk;
}

int cmd_estimate(const std::string& in_path, int num_sources,
                 const std::vector<double>& wavelengths, bool estimate_freq,
                 const std::string& meta_path) {
    if (num_sources < 1 || num_sources > 3)
        throw ste::Error(ste::Errc::InvalidArgument, "estimate", "--k must be 1, 2 or 3");
    if (estimate_freq && !wavelengths.empty())
        throw ste::Error(ste::Errc::InvalidArgument, "estimate",
                         "--wavelengths and --estimate-freq are mutually exclusive");

    const ste::CMat y = ste::snapshots_from_csv(ste::read_file(in_path));

    // Layout comes from the metadata sidecar written by `simulate`.
    const std::string meta = meta_path.empty() ? sidecar_path(in_path) : meta_path;
    const ste::Scenario scenario = ste::scenario_from_json(ste::read_file(meta));

    ste::WavelengthMode mode = ste::WavelengthMode::estimate();
    if (!estimate_freq) {
        std::vector<double> wl = wavelengths;
        if (wl.empty()) wl = ste::wavelengths_of(scenario);
        if (wl.size() != static_cast<std::size_t>(num_sources))
            throw ste::Error(ste::Errc::InvalidArgument, "estimate",
                             "--wavelengths must list one value per source");
        mode = ste::WavelengthMode::known(std::move(wl));
    }

    try {
        const ste::EstimationResult result =
            ste::run_pipeline(y, scenario.layout, num_sources, mode);
        std::cout << ste::estimation_result_to_json(result);
    } catch (const ste::Error& err) {
        std::cout << ste::error_to_json(err);
        return kExitEstimation;
    }
    return kExitOk;
}

int cmd_sweep(const std::string& config_path, const std::string& param, double from, double to,
              double step, int trials, int snapshots, std::uint64_t master_seed,
              const std::string& out_path) {
    if (!(step > 0.0))
        throw ste::Error(ste::Errc::InvalidArgument, "sweep", "--step must be positive");
    if (to < from)
        throw ste::Error(ste::Errc::InvalidArgument, "sweep", "--to must be >= --from");

    ste::SweepSpec spec;
    spec.base = ste::scenario_from_json(ste::read_file(config_path));
    if (param == "snr")
        spec.param = ste::SweepParam::SnrDb;
    else if (param == "spacing")
        spec.param = ste::SweepParam::SpacingScale;
    else
        throw ste::Error(ste::Errc::InvalidArgument, "sweep", "--param must be snr or spacing");
    for (double v = from; v <= to + 1e-9 * std::max(1.0, std::abs(to)); v += step)
        spec.grid.push_back(v);
    spec.trials = trials;
    spec.snapshots = snapshots;
    spec.master_seed = master_seed;

    const ste::TrialReport report = ste::run_sweep(spec);
    ste::write_file(out_path, ste::export_csv(report));
    ste::write_file(sidecar_path(out_path), ste::sweep_spec_to_json(spec));
    std::cerr << "wrote " << report.size() << " grid points to " << out_path << "\n";
    return kExitOk;
}

int cmd_selftest() {
    const auto checks = ste::run_selftest();
    bool all = true;
    for (const auto& c : checks) {
        std::cout << (c.passed ? "[PASS] " : "[FAIL] ") << c.name << " -- " << c.detail << "\n";
        all = all && c.passed;
    }
    std::cout << (all ? "selftest: all checks passed\n" : "selftest: FAILURES\n");
    return all ? kExitOk : kExitEstimation;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"DOA and polarization estimation with sparse non-collocating triad arrays"};
    app.require_subcommand(1);

    auto* simulate = app.add_subcommand("simulate", "Generate snapshots from a scenario config");
    std::string sim_config, sim_out;
    std::optional<std::uint64_t> sim_seed;
    simulate->add_option("--config", sim_config, "Scenario JSON")->required();
    simulate->add_option("--out", sim_out, "Output snapshot CSV")->required();
    simulate->add_option("--seed", sim_seed, "Override the config seed");

    auto* estimate = app.add_subcommand("estimate", "Run the estimator on a snapshot CSV");
    std::string est_in, est_meta;
    int est_k = 1;
    std::vector<double> est_wavelengths;
    bool est_freq = false;
    estimate->add_option("--in", est_in, "Snapshot CSV")->required();
    estimate->add_option("--k", est_k, "Number of sources (1..3)")->required();
    estimate->add_option("--wavelengths", est_wavelengths,
                         "Known wavelengths, reference-wavelength units")
        ->delimiter(',');
    estimate->add_flag("--estimate-freq", est_freq, "Estimate wavelengths from the data");
    estimate->add_option("--meta", est_meta,
                         "Metadata JSON with the array layout (default: input with .json)");

    auto* sweep = app.add_subcommand("sweep", "Monte Carlo RMSE sweep");
    std::string sw_config, sw_param, sw_out;
    double sw_from = 0.0, sw_to = 0.0, sw_step = 0.0;
    int sw_trials = 200, sw_snapshots = 100;
    std::uint64_t sw_seed = 0;
    sweep->add_option("--config", sw_config, "Base scenario JSON")->required();
    sweep->add_option("--param", sw_param, "snr | spacing")->required();
    sweep->add_option("--from", sw_from, "Grid start")->required();
    sweep->add_option("--to", sw_to, "Grid end (inclusive)")->required();
    sweep->add_option("--step", sw_step, "Grid step")->required();
    sweep->add_option("--trials", sw_trials, "Trials per grid point");
    sweep->add_option("--snapshots", sw_snapshots, "Snapshots per trial");
    sweep->add_option("--seed", sw_seed, "Master seed");
    sweep->add_option("--out", sw_out, "Output CSV")->required();

    auto* selftest = app.add_subcommand("selftest", "Run built-in consistency checks");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitValidation;
    }

    try {
        if (simulate->parsed()) return cmd_simulate(sim_config, sim_out, sim_seed);
        if (estimate->parsed())
            return cmd_estimate(est_in, est_k, est_wavelengths, est_freq, est_meta);
        if (sweep->parsed())
            return cmd_sweep(sw_config, sw_param, sw_from, sw_to, sw_step, sw_trials,
                             sw_snapshots, sw_seed, sw_out);
        if (selftest->parsed()) return cmd_selftest();
    } catch (const ste::Error& err) {
        std::cerr << "error: " << err.what() << "\n";
        return exit_code_for(err);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    }
    return kExitOk;
}
