#include "ste/estimator.hpp"

#include "ste/numerics.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <tuple>

namespace ste {

CMat covariance(const Eigen::Ref<const CMat>& y) {
    if (y.rows() != 9)
        throw Error(Errc::InvalidArgument, "covariance", "snapshot matrix must have 9 rows");
    if (y.cols() < 9)
        throw Error(Errc::InvalidArgument, "covariance", "need at least 9 snapshots");
    CMat r = y * y.adjoint();
    r = 0.5 * (r + r.adjoint()).eval();
    return r;
}

SubspaceDecomposition signal_subspace(const Eigen::Ref<const CMat>& r, int num_sources) {
    if (num_sources < 1 || num_sources > 3)
        throw Error(Errc::InvalidArgument, "signal_subspace", "source count must be 1..3");
    const EigenPair eig = eig_hermitian(r);
    SubspaceDecomposition sub;
    sub.es = eig.vectors.leftCols(num_sources);
    sub.eigenvalues = eig.values.head(num_sources).real();
    return sub;
}

namespace {

// Canonical source order: ascending eigenvalue phase. The solver's own
// output order is arbitrary and unstable under tiny perturbations.
std::vector<Eigen::Index> phase_order(const CVec& values) {
    std::vector<Eigen::Index> order(static_cast<std::size_t>(values.size()));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        return std::arg(values(a)) < std::arg(values(b));
    });
    return order;
}

}  // namespace

RotationEstimates rotation_operators(const SubspaceDecomposition& sub) {
    constexpr const char* stage = "rotation_operators";
    RotationEstimates rot;
    rot.phi_y = lstsq(sub.es1(), sub.es2());
    rot.phi_x = lstsq(sub.es1(), sub.es3());

    const EigenPair eig_y = eig_general_small(rot.phi_y);
    const EigenPair eig_x = eig_general_small(rot.phi_x);
    const Eigen::Index n = eig_y.values.size();

    const auto order_y = phase_order(eig_y.values);
    CMat vectors_y(n, n);
    rot.d_y.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        rot.d_y(i) = eig_y.values(order_y[static_cast<std::size_t>(i)]);
        vectors_y.col(i) = eig_y.vectors.col(order_y[static_cast<std::size_t>(i)]);
    }
    const auto order_x = phase_order(eig_x.values);
    rot.d_x.resize(n);
    for (Eigen::Index i = 0; i < n; ++i)
        rot.d_x(i) = eig_x.values(order_x[static_cast<std::size_t>(i)]);

    // Es1 ~ A1 T with the eigenvector matrix of phi_y estimating T^{-1}.
    rot.t_hat = vectors_y.inverse();

    // Sources sharing a direction-cosine grid point leave the rotation
    // eigenvalues coincident; that case flows through with degraded output
    // unless the eigensolver itself reports a deficient eigenspace.
    const Eigen::Index k = rot.d_y.size();
    for (const CVec* d : {&rot.d_y, &rot.d_x}) {
        for (Eigen::Index i = 0; i < k; ++i) {
            const double mag = std::abs((*d)(i));
            if (mag < 0.5 || mag > 1.5)
                throw Error(Errc::DefectiveMatrix, stage,
                            "rotation eigenvalue magnitude outside [0.5, 1.5]");
        }
    }
    return rot;
}

CMat recover_steering(const SubspaceDecomposition& sub, const RotationEstimates& rot) {
    constexpr const char* stage = "recover_steering";
    Eigen::JacobiSVD<CMat> svd(rot.t_hat);
    const auto& sv = svd.singularValues();
    if (!(sv(sv.size() - 1) > 0.0) || sv(0) / sv(sv.size() - 1) >= 1e8)
        throw Error(Errc::IllConditionedT, stage, "mixing matrix condition number >= 1e8");
    const CMat t_inv = rot.t_hat.inverse();
    const CMat d_y_inv = rot.d_y.cwiseInverse().asDiagonal();
    return sub.es1() * t_inv + sub.es2() * t_inv * d_y_inv;
}

std::vector<double> fine_direction_cosines(const CVec& sigmas,
                                           std::span<const double> wavelengths,
                                           double spacing) {
    if (static_cast<std::size_t>(sigmas.size()) != wavelengths.size())
        throw Error(Errc::InvalidArgument, "fine_direction_cosines",
                    "one wavelength per eigenvalue required");
    std::vector<double> out(wavelengths.size());
    for (Eigen::Index i = 0; i < sigmas.size(); ++i) {
        if (std::abs(sigmas(i)) == 0.0)
            throw Error(Errc::InvalidArgument, "fine_direction_cosines", "zero eigenvalue");
        out[static_cast<std::size_t>(i)] =
            -wavelengths[static_cast<std::size_t>(i)] / (two_pi * spacing) * std::arg(sigmas(i));
    }
    return out;
}

namespace detail {

Vec2c d_vector_with_sign(const Eigen::Ref<const Vec3c>& a_col, cxd sigma_y, int m1, int m2,
                         int sign) {
    constexpr const char* stage = "d_vector";
    const double scale = a_col.norm();
    if (std::abs(a_col(2)) <= 1e-12 * scale)
        throw Error(Errc::TinyDenominator, stage,
                    "z-element response is negligible; element ratios are undefined");
    const double ang = std::arg(sigma_y);
    Vec2c d;
    d(0) = a_col(0) / a_col(2) * cis(sign * (m1 + m2) * ang);
    d(1) = a_col(1) / a_col(2) * cis(sign * m2 * ang);
    return d;
}

}  // namespace detail

Vec2c d_vector(const Eigen::Ref<const Vec3c>& a_col, cxd sigma_y, int m1, int m2) {
    return detail::d_vector_with_sign(a_col, sigma_y, m1, m2, +1);
}

namespace {

// acot into (0, pi).
double acot(double x) { return pi / 2 - std::atan(x); }

struct AngleCandidate {
    CoarseAngles angles;
    double score = std::numeric_limits<double>::infinity();
};

// theta2/theta4/theta3 completion for a fixed azimuth candidate.
CoarseAngles complete_candidate(const Vec2c& d, TriadKind kind, double theta1) {
    CoarseAngles c;
    c.theta1 = theta1;
    const double re1 = d(0).real(), re2 = d(1).real();
    const double proj = re1 * std::cos(theta1) + re2 * std::sin(theta1);
    c.theta2 = proj <= 0.0 ? std::atan(-proj) : std::atan(-proj) + pi;

    const cxd residual = d(0) * std::sin(theta1) - d(1) * std::cos(theta1);
    c.theta4 = kind == TriadKind::DipoleTriad ? -std::arg(residual) : std::arg(-residual);

    const double denom = std::sin(c.theta4) * std::cos(theta1);
    const double ratio = d(1).imag() * std::cos(c.theta2) / denom;
    // ratio is NaN where the published formula is singular (cos(theta1) ~ 0
    // with vanishing Im d2); the candidate then scores as unusable.
    c.theta3 = kind == TriadKind::DipoleTriad ? acot(ratio) : std::atan(ratio);
    return c;
}

// Distance between the measured element ratios and the candidate's model,
// compared as unit 3-vectors so a small z-response cannot blow up.
double reconstruction_residual(const Vec2c& d, TriadKind kind, const CoarseAngles& c) {
    SourceParams p{wrap_two_pi(c.theta1), c.theta2, c.theta3, wrap_pi(c.theta4), 1.0};
    // Evaluate the field directly; candidate angles may sit outside the
    // canonical ranges while scoring.
    const double c1 = std::cos(p.theta1), s1 = std::sin(p.theta1);
    const double c3 = std::cos(p.theta3), s3 = std::sin(p.theta3);
    const cxd g = s3 * cis(p.theta4);
    Vec3c f;
    if (kind == TriadKind::DipoleTriad) {
        f(0) = c1 * std::sin(p.theta2) * g - s1 * c3;
        f(1) = s1 * std::sin(p.theta2) * g + c1 * c3;
        f(2) = -std::cos(p.theta2) * g;
    } else {
        f(0) = -s1 * g - c1 * std::sin(p.theta2) * c3;
        f(1) = c1 * g - s1 * std::sin(p.theta2) * c3;
        f(2) = std::cos(p.theta2) * c3;
    }
    if (std::abs(f(2)) == 0.0) return std::numeric_limits<double>::infinity();
    Vec3c model = f * (std::conj(f(2)) / std::abs(f(2)));  // f / f_z, normalized
    model.normalize();
    Vec3c measured;
    measured << d(0), d(1), cxd(1.0, 0.0);
    measured.normalize();
    return (measured - model).norm();
}

// Penalty for leaving the valid elevation/polarization ranges; dominates
// the residual so in-range candidates always win.
double range_penalty(const CoarseAngles& c) {
    auto outside = [](double v, double lo, double hi) {
        return std::max(0.0, lo - v) + std::max(0.0, v - hi);
    };
    return outside(c.theta2, 0.0, pi / 2) + outside(c.theta3, 0.0, pi / 2);
}

CoarseAngles canonicalize(CoarseAngles c) {
    c.theta1 = wrap_two_pi(c.theta1);
    c.theta2 = std::clamp(c.theta2, 0.0, pi / 2);
    c.theta3 = std::clamp(c.theta3, 0.0, pi / 2);
    c.theta4 = wrap_pi(c.theta4);
    if (c.theta4 == pi) c.theta4 = -pi;
    return c;
}

}  // namespace

CoarseAngles coarse_angles(const Vec2c& d, TriadKind kind) {
    constexpr const char* stage = "coarse_angles";
    if (!d.allFinite()) throw Error(Errc::InvalidArgument, stage, "non-finite d-vector");
    const double im1 = d(0).imag(), im2 = d(1).imag();
    if (std::abs(im1) < 1e-10 && std::abs(im2) < 1e-10)
        throw Error(Errc::DegeneratePolarization, stage,
                    "imaginary parts of d vanish; azimuth is undetermined");

    // The published azimuth branch rule needs sin(theta4), which is not
    // known yet; complete both azimuth candidates and score them instead.
    const double base = std::atan2(-im1, im2);
    AngleCandidate best;
    for (const double theta1 : {base, base + pi}) {
        const CoarseAngles c = complete_candidate(d, kind, theta1);
        const double score = reconstruction_residual(d, kind, c) + 10.0 * range_penalty(c);
        if (std::isfinite(score) && score < best.score) best = {c, score};
    }
    if (!std::isfinite(best.score))
        throw Error(Errc::DegeneratePolarization, stage,
                    "polarization formulas are singular for this d-vector");
    return canonicalize(best.angles);
}

Disambiguated disambiguate(double u_fine, double u_coarse, double spacing_over_lambda) {
    constexpr const char* stage = "disambiguate";
    if (!(spacing_over_lambda >= 0.5))
        throw Error(Errc::InvalidArgument, stage, "spacing must be at least half a wavelength");
    const double grid = 1.0 / spacing_over_lambda;
    const long n_lo = static_cast<long>(std::ceil((-1.0 - u_fine) / grid - 1e-12));
    const long n_hi = static_cast<long>(std::floor((1.0 - u_fine) / grid + 1e-12));
    if (n_lo > n_hi)
        throw Error(Errc::NoFeasibleInteger, stage, "no integer keeps |u| <= 1");

    Disambiguated best;
    double best_dist = std::numeric_limits<double>::infinity();
    for (long n = n_lo; n <= n_hi; ++n) {
        const double u = u_fine + static_cast<double>(n) * grid;
        const double dist = std::abs(u - u_coarse);
        if (dist < best_dist) {
            best_dist = dist;
            best = {u, n};
        }
    }
    return best;
}

std::vector<int> pair_eigenvalues(const CVec& q_coarse, const CVec& d_x) {
    if (q_coarse.size() != d_x.size())
        throw Error(Errc::InvalidArgument, "pair_eigenvalues", "size mismatch");
    const Eigen::Index k = q_coarse.size();
    std::vector<int> perm(static_cast<std::size_t>(k), -1);
    std::vector<bool> source_done(static_cast<std::size_t>(k), false);
    std::vector<bool> sigma_taken(static_cast<std::size_t>(k), false);
    // Globally ascending distances keep the assignment one-to-one; ties
    // break toward the lower source index.
    for (Eigen::Index round = 0; round < k; ++round) {
        double best = std::numeric_limits<double>::infinity();
        int best_src = -1, best_sig = -1;
        for (Eigen::Index i = 0; i < k; ++i) {
            if (source_done[static_cast<std::size_t>(i)]) continue;
            for (Eigen::Index j = 0; j < k; ++j) {
                if (sigma_taken[static_cast<std::size_t>(j)]) continue;
                const double dist = std::abs(q_coarse(i) - d_x(j));
                if (dist < best) {
                    best = dist;
                    best_src = static_cast<int>(i);
                    best_sig = static_cast<int>(j);
                }
            }
        }
        perm[static_cast<std::size_t>(best_src)] = best_sig;
        source_done[static_cast<std::size_t>(best_src)] = true;
        sigma_taken[static_cast<std::size_t>(best_sig)] = true;
    }
    return perm;
}

FinalDoa final_doa(double u_x, double u_y) {
    constexpr const char* stage = "final_doa";
    double r2 = u_x * u_x + u_y * u_y;
    if (r2 > 1.0 + 1e-9)
        throw Error(Errc::InfeasibleDirection, stage, "direction cosines leave the unit disk");
    r2 = std::min(r2, 1.0);
    FinalDoa out;
    if (r2 == 0.0) {
        out.theta1 = 0.0;
        out.theta2 = pi / 2;
        out.zenith_degenerate = true;
        return out;
    }
    out.theta1 = wrap_two_pi(std::atan2(u_y, u_x));
    out.theta2 = std::acos(std::sqrt(r2));
    return out;
}

std::pair<double, double> refine_polarization(const Vec2c& d, double theta1_final,
                                              double theta2_final, TriadKind kind) {
    constexpr const char* stage = "refine_polarization";
    const double im1 = d(0).imag(), im2 = d(1).imag();
    if (std::abs(im1) < 1e-10 && std::abs(im2) < 1e-10)
        throw Error(Errc::DegeneratePolarization, stage,
                    "imaginary parts of d vanish; polarization is undetermined");
    const cxd residual = d(0) * std::sin(theta1_final) - d(1) * std::cos(theta1_final);
    double theta4 = kind == TriadKind::DipoleTriad ? -std::arg(residual) : std::arg(-residual);
    const double denom = std::sin(theta4) * std::cos(theta1_final);
    const double ratio = d(1).imag() * std::cos(theta2_final) / denom;
    if (!std::isfinite(ratio))
        throw Error(Errc::DegeneratePolarization, stage,
                    "polarization formulas are singular for this d-vector");
    double theta3 = kind == TriadKind::DipoleTriad ? acot(ratio) : std::atan(ratio);
    theta3 = std::clamp(theta3, 0.0, pi / 2);
    theta4 = wrap_pi(theta4);
    if (theta4 == pi) theta4 = -pi;
    return {theta3, theta4};
}

std::vector<double> estimate_frequencies(const Eigen::Ref<const CMat>& y,
                                         const Eigen::Ref<const CMat>& a_full_hat) {
    constexpr const char* stage = "estimate_frequencies";
    Eigen::JacobiSVD<CMat> svd(a_full_hat);
    const auto& sv = svd.singularValues();
    if (sv(sv.size() - 1) <= 1e-12 * sv(0))
        throw Error(Errc::RankDeficient, stage, "steering estimate is rank deficient");
    const CMat s = pinv(a_full_hat) * y;
    std::vector<double> freqs(static_cast<std::size_t>(s.rows()));
    for (Eigen::Index k = 0; k < s.rows(); ++k) {
        cxd acc = 0.0;
        for (Eigen::Index m = 0; m + 1 < s.cols(); ++m) acc += s(k, m + 1) * std::conj(s(k, m));
        freqs[static_cast<std::size_t>(k)] = std::abs(std::arg(acc) / two_pi);
    }
    return freqs;
}

EstimationResult run_pipeline(const Eigen::Ref<const CMat>& y, const ArrayLayout& layout,
                              int num_sources, const WavelengthMode& mode) {
    if (num_sources < 1 || num_sources > 3)
        throw Error(Errc::InvalidArgument, "run_pipeline", "source count must be 1..3");
    if (mode.kind == WavelengthMode::Kind::Known &&
        mode.wavelengths.size() != static_cast<std::size_t>(num_sources))
        throw Error(Errc::InvalidArgument, "run_pipeline",
                    "known mode requires one wavelength per source");

    EstimationResult result;
    const CMat r = covariance(y);
    const SubspaceDecomposition sub = signal_subspace(r, num_sources);
    result.signal_eigenvalues = sub.eigenvalues;
    const RotationEstimates rot = rotation_operators(sub);
    const CMat a1_hat = recover_steering(sub, rot);

    // Coarse angles are wavelength-free: the compensation phases in the
    // d-vector are integer powers of the eigenvalue phase.
    const auto n_src = static_cast<std::size_t>(num_sources);
    result.sources.resize(n_src);
    std::vector<Vec2c> d_vectors(n_src);
    for (int k = 0; k < num_sources; ++k) {
        auto& est = result.sources[static_cast<std::size_t>(k)];
        const Vec2c d = d_vector(a1_hat.col(k), rot.d_y(k), layout.m1, layout.m2);
        d_vectors[static_cast<std::size_t>(k)] = d;
        est.coarse = coarse_angles(d, layout.kind);
        const auto uc = direction_cosines(est.coarse.theta1, est.coarse.theta2);
        est.u_x_coarse = uc.u_x;
        est.u_y_coarse = uc.u_y;
    }

    std::vector<double> wavelengths(n_src);
    if (mode.kind == WavelengthMode::Kind::Known) {
        // The internal source order follows the phi_y eigenvalues, not the
        // caller's list order. Associate wavelengths by predicting both
        // rotation eigenvalues from the coarse angles; this uses the data
        // only through R, so estimates stay snapshot-order invariant.
        std::vector<int> order(n_src);
        std::iota(order.begin(), order.end(), 0);
        std::vector<int> best = order;
        double best_cost = std::numeric_limits<double>::infinity();
        do {
            double cost = 0.0;
            CVec q_x_pred(num_sources);
            for (int k = 0; k < num_sources; ++k) {
                const double wl =
                    mode.wavelengths[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])];
                const auto& est = result.sources[static_cast<std::size_t>(k)];
                cost += std::abs(cis(-two_pi * layout.delta_y * est.u_y_coarse / wl) - rot.d_y(k));
                q_x_pred(k) = cis(-two_pi * layout.delta_x * est.u_x_coarse / wl);
            }
            // Best-case x-axis pairing under this wavelength assignment.
            std::vector<int> m(n_src);
            std::iota(m.begin(), m.end(), 0);
            double x_cost = std::numeric_limits<double>::infinity();
            do {
                double c = 0.0;
                for (int k = 0; k < num_sources; ++k)
                    c += std::abs(q_x_pred(k) - rot.d_x(m[static_cast<std::size_t>(k)]));
                x_cost = std::min(x_cost, c);
            } while (std::next_permutation(m.begin(), m.end()));
            cost += x_cost;
            if (cost < best_cost) {
                best_cost = cost;
                best = order;
            }
        } while (std::next_permutation(order.begin(), order.end()));
        for (int k = 0; k < num_sources; ++k)
            wavelengths[static_cast<std::size_t>(k)] =
                mode.wavelengths[static_cast<std::size_t>(best[static_cast<std::size_t>(k)])];
    } else {
        const CMat a_full_hat = sub.es * rot.t_hat.inverse();
        result.estimated_frequencies = estimate_frequencies(y, a_full_hat);
        double f_max = 0.0;
        for (const double f : result.estimated_frequencies) f_max = std::max(f_max, f);
        for (std::size_t k = 0; k < n_src; ++k) {
            const double f = result.estimated_frequencies[k];
            if (!(f > 1e-9))
                throw Error(Errc::InvalidArgument, "estimate_frequencies",
                            "estimated frequency is indistinguishable from zero");
            wavelengths[k] = f_max / f;
        }
    }

    const std::vector<double> u_y_fine =
        fine_direction_cosines(rot.d_y, wavelengths, layout.delta_y);

    CVec q_x_coarse(num_sources);
    for (int k = 0; k < num_sources; ++k) {
        auto& est = result.sources[static_cast<std::size_t>(k)];
        est.wavelength = wavelengths[static_cast<std::size_t>(k)];
        est.u_y_fine = u_y_fine[static_cast<std::size_t>(k)];

        const auto dis_y =
            disambiguate(est.u_y_fine, est.u_y_coarse, layout.delta_y / est.wavelength);
        est.u_y_final = dis_y.u_final;
        est.n_y = dis_y.n;

        q_x_coarse(k) = cis(-two_pi * layout.delta_x * est.u_x_coarse / est.wavelength);
    }

    const std::vector<int> perm = pair_eigenvalues(q_x_coarse, rot.d_x);
    for (int k = 0; k < num_sources; ++k) {
        auto& est = result.sources[static_cast<std::size_t>(k)];
        est.paired_index = perm[static_cast<std::size_t>(k)];
        const cxd sigma_x = rot.d_x(est.paired_index);
        est.u_x_fine = -est.wavelength / (two_pi * layout.delta_x) * std::arg(sigma_x);

        const auto dis_x =
            disambiguate(est.u_x_fine, est.u_x_coarse, layout.delta_x / est.wavelength);
        est.u_x_final = dis_x.u_final;
        est.n_x = dis_x.n;

        const FinalDoa doa = final_doa(est.u_x_final, est.u_y_final);
        est.theta1 = doa.theta1;
        est.theta2 = doa.theta2;
        est.zenith_degenerate = doa.zenith_degenerate;

        std::tie(est.theta3, est.theta4) = refine_polarization(
            d_vectors[static_cast<std::size_t>(k)], est.theta1, est.theta2, layout.kind);
    }
    return result;
}

}  // namespace ste
