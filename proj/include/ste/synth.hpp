#pragma once

#include "ste/geometry.hpp"
#include "ste/manifold.hpp"
#include "ste/types.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace ste {

/// Ground truth for one source. `params.wavelength` is derived from the
/// scenario's frequencies as f_max / f_k (the highest-frequency source has
/// wavelength exactly one reference wavelength); resolve_wavelengths()
/// fills it in. The initial phase is drawn per trial when unset.
struct SourceTruth {
    SourceParams params;
    double digital_frequency = 0.0;  // cycles/sample, in (0, 0.5)
    std::optional<double> initial_phase;
};

struct Scenario {
    ArrayLayout layout;
    std::vector<SourceTruth> sources;  // 1..3 sources
    int snapshots = 100;               // M >= 9
    double snr_db = 20.0;              // per source, per antenna, per complex sample
    bool noiseless = false;
    std::uint64_t seed = 0;
};

/// Checks scenario invariants and sets each source's wavelength from the
/// frequency grid. Throws InvalidArgument on violations.
Scenario resolve_wavelengths(Scenario scenario);

/// True wavelengths of a resolved scenario, in source order.
std::vector<double> wavelengths_of(const Scenario& scenario);

struct SnapshotMatrix {
    CMat y;                       // 9 x M
    Scenario scenario;            // resolved scenario the data came from
    double noise_variance = 0.0;  // sigma^2 per complex sample (0 when noiseless)
};

/// Unit-power complex exponential s(m) = e^{j (2 pi f m + psi)}, m = 0..M-1.
CVec signal_waveform(double frequency, double initial_phase, int snapshots);

/// Y = sum_k a_k s_k^T + N with circular white Gaussian noise of variance
/// 10^(-snr_db/10) per complex entry. Deterministic for a fixed seed
/// (mt19937_64; unpinned initial phases are drawn first, then the noise,
/// column by column).
SnapshotMatrix generate(const Scenario& scenario);

/// Seed-splitting rule for independent Monte Carlo trials.
inline std::uint64_t trial_seed(std::uint64_t master, std::uint64_t trial_index) {
    return master ^ (trial_index * 0x9E3779B97F4A7C15ULL);
}

}  // namespace ste
