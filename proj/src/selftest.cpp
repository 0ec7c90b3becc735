#include "ste/selftest.hpp"

#include "ste/estimator.hpp"
#include "ste/harness.hpp"
#include "ste/manifold.hpp"
#include "ste/synth.hpp"

#include <cmath>
#include <random>
#include <sstream>

namespace ste {

namespace {

SourceTruth source(double t1_deg, double t2_deg, double t3_deg, double t4_deg, double freq) {
    SourceTruth s;
    s.params.theta1 = t1_deg * pi / 180.0;
    s.params.theta2 = t2_deg * pi / 180.0;
    s.params.theta3 = t3_deg * pi / 180.0;
    s.params.theta4 = t4_deg * pi / 180.0;
    s.digital_frequency = freq;
    s.initial_phase = 0.3;
    return s;
}

Scenario reference_scenario(int num_sources) {
    Scenario s;
    s.layout = make_layout(TriadKind::DipoleTriad, 4.0, 4.0, 2, 2);  // d1 = d2 = 8
    s.sources = {source(30, 15, 45, 90, 0.0895), source(73, 43, 45, -90, 0.1685),
                 source(150, 77, 45, 90, 0.2555)};
    s.sources.resize(static_cast<std::size_t>(num_sources));
    s.snapshots = 100;
    s.noiseless = true;
    s.seed = 7;
    return s;
}

SelftestCheck check_poynting() {
    SelftestCheck c{"cross-product field identity (10000 random draws)", true, ""};
    std::mt19937_64 rng(20240901);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    double worst = 0.0;
    for (int i = 0; i < 10000; ++i) {
        SourceParams p;
        p.theta1 = u01(rng) * two_pi;
        p.theta2 = u01(rng) * pi / 2;
        p.theta3 = u01(rng) * pi / 2;
        p.theta4 = u01(rng) * two_pi - pi;
        p.wavelength = 0.5 + u01(rng) * 3.0;
        const Vec3d got = poynting(p);
        const auto [ux, uy] = direction_cosines(p.theta1, p.theta2);
        const Vec3d want(ux, uy, std::sin(p.theta2));
        worst = std::max(worst, (got - want).cwiseAbs().maxCoeff());
    }
    if (worst > 1e-12) c.passed = false;
    std::ostringstream os;
    os << "max deviation " << worst;
    c.detail = os.str();
    return c;
}

SelftestCheck check_noiseless_round_trip() {
    SelftestCheck c{"noiseless end-to-end round trip (2 and 3 sources)", true, ""};
    double worst_angle = 0.0, worst_u = 0.0;
    for (int k : {2, 3}) {
        const Scenario scenario = resolve_wavelengths(reference_scenario(k));
        const SnapshotMatrix snap = generate(scenario);
        EstimationResult res;
        try {
            res = run_pipeline(snap, k, WavelengthMode::known(wavelengths_of(scenario)));
        } catch (const Error& e) {
            c.passed = false;
            c.detail = e.what();
            return c;
        }
        for (int i = 0; i < k; ++i) {
            const auto& truth = scenario.sources[static_cast<std::size_t>(i)].params;
            const auto tu = direction_cosines(truth.theta1, truth.theta2);
            // Match by nearest final direction cosines.
            int jbest = 0;
            double dbest = 1e300;
            for (int j = 0; j < k; ++j) {
                const auto& e = res.sources[static_cast<std::size_t>(j)];
                const double d = std::hypot(e.u_x_final - tu.u_x, e.u_y_final - tu.u_y);
                if (d < dbest) { dbest = d; jbest = j; }
            }
            const auto& est = res.sources[static_cast<std::size_t>(jbest)];
            worst_u = std::max({worst_u, std::abs(est.u_x_final - tu.u_x),
                                std::abs(est.u_y_final - tu.u_y)});
            worst_angle = std::max({worst_angle, std::abs(est.theta1 - truth.theta1),
                                    std::abs(est.theta2 - truth.theta2),
                                    std::abs(est.theta3 - truth.theta3),
                                    std::abs(est.theta4 - truth.theta4)});
        }
    }
    if (worst_u > 1e-6 || worst_angle > 1e-5) c.passed = false;
    std::ostringstream os;
    os << "max |u| error " << worst_u << ", max angle error " << worst_angle << " rad";
    c.detail = os.str();
    return c;
}

SelftestCheck check_phase_sign() {
    SelftestCheck c{"phase-compensation sign regression", true, ""};
    const Scenario scenario = resolve_wavelengths(reference_scenario(1));
    const auto& p = scenario.sources[0].params;
    const Vec3c a_nc = triad_manifold(p, scenario.layout);
    const auto uy = direction_cosines(p.theta1, p.theta2).u_y;
    const cxd sigma = cis(-two_pi * scenario.layout.delta_y * uy / p.wavelength);
    const Vec3c field = e_field(p);
    const Vec2c want(field(0) / field(2), field(1) / field(2));

    const Vec2c good = detail::d_vector_with_sign(a_nc, sigma, scenario.layout.m1,
                                                  scenario.layout.m2, +1);
    const Vec2c bad = detail::d_vector_with_sign(a_nc, sigma, scenario.layout.m1,
                                                 scenario.layout.m2, -1);
    const double err_good = (good - want).norm();
    const double err_bad = (bad - want).norm();
    if (err_good > 1e-8 || err_bad < 1e-3) c.passed = false;
    std::ostringstream os;
    os << "forward-model error " << err_good << " (flipped sign " << err_bad << ")";
    c.detail = os.str();
    return c;
}

}  // namespace

std::vector<SelftestCheck> run_selftest() {
    return {check_poynting(), check_noiseless_round_trip(), check_phase_sign()};
}

}  // namespace ste
