#include "ste/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace ste {

Scenario resolve_wavelengths(Scenario scenario) {
    constexpr const char* stage = "scenario";
    const std::size_t k = scenario.sources.size();
    if (k < 1 || k > 3)
        throw Error(Errc::InvalidArgument, stage, "sources: need 1 to 3 sources");
    if (scenario.snapshots < 9)
        throw Error(Errc::InvalidArgument, stage, "snapshots: need at least 9");

    double f_max = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        const double f = scenario.sources[i].digital_frequency;
        if (!(f > 0.0 && f < 0.5))
            throw Error(Errc::InvalidArgument, stage,
                        "sources[" + std::to_string(i) + "].frequency must lie in (0, 0.5)");
        for (std::size_t j = 0; j < i; ++j)
            if (scenario.sources[j].digital_frequency == f)
                throw Error(Errc::InvalidArgument, stage,
                            "sources[" + std::to_string(i) + "].frequency duplicates another source");
        f_max = std::max(f_max, f);
    }
    for (auto& src : scenario.sources) {
        src.params.wavelength = f_max / src.digital_frequency;
        validate(src.params);
    }
    return scenario;
}

std::vector<double> wavelengths_of(const Scenario& scenario) {
    std::vector<double> out;
    out.reserve(scenario.sources.size());
    for (const auto& src : scenario.sources) out.push_back(src.params.wavelength);
    return out;
}

CVec signal_waveform(double frequency, double initial_phase, int snapshots) {
    if (!(frequency > 0.0 && frequency < 0.5))
        throw Error(Errc::InvalidArgument, "signal_waveform", "frequency must lie in (0, 0.5)");
    CVec s(snapshots);
    for (int m = 0; m < snapshots; ++m) s(m) = cis(two_pi * frequency * m + initial_phase);
    return s;
}

SnapshotMatrix generate(const Scenario& raw) {
    Scenario scenario = resolve_wavelengths(raw);
    const int m = scenario.snapshots;
    const auto k = static_cast<Eigen::Index>(scenario.sources.size());

    std::mt19937_64 rng(scenario.seed);
    std::uniform_real_distribution<double> phase_dist(0.0, two_pi);
    std::vector<double> phases(scenario.sources.size());
    for (std::size_t i = 0; i < scenario.sources.size(); ++i) {
        const auto& pinned = scenario.sources[i].initial_phase;
        phases[i] = pinned ? *pinned : phase_dist(rng);
    }

    CMat y = CMat::Zero(9, m);
    for (Eigen::Index i = 0; i < k; ++i) {
        const auto& src = scenario.sources[static_cast<std::size_t>(i)];
        const Vec9c a = full_steering(src.params, scenario.layout);
        const CVec s = signal_waveform(src.digital_frequency, phases[static_cast<std::size_t>(i)], m);
        y.noalias() += a * s.transpose();
    }

    double sigma2 = 0.0;
    if (!scenario.noiseless) {
        sigma2 = std::pow(10.0, -scenario.snr_db / 10.0);
        const double scale = std::sqrt(sigma2 / 2.0);
        std::normal_distribution<double> gauss(0.0, 1.0);
        for (int col = 0; col < m; ++col)
            for (int row = 0; row < 9; ++row) {
                const double re = gauss(rng);
                const double im = gauss(rng);
                y(row, col) += cxd(scale * re, scale * im);
            }
    }
    return SnapshotMatrix{std::move(y), std::move(scenario), sigma2};
}

}  // namespace ste
