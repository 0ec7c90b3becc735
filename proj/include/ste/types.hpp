#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>

namespace ste {

using cxd = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using Vec2c = Eigen::Vector2cd;
using Vec3c = Eigen::Vector3cd;
using Vec3d = Eigen::Vector3d;
using Vec9c = Eigen::Matrix<cxd, 9, 1>;

inline constexpr double pi = 3.14159265358979323846;
inline constexpr double two_pi = 2.0 * pi;

/// e^{j a}
inline cxd cis(double a) { return {std::cos(a), std::sin(a)}; }

/// Principal angle in (-pi, pi].
inline double wrap_pi(double a) {
    double r = std::remainder(a, two_pi);
    if (r <= -pi) r += two_pi;
    return r;
}

/// Angle in [0, 2*pi).
inline double wrap_two_pi(double a) {
    double r = std::fmod(a, two_pi);
    if (r < 0.0) r += two_pi;
    return r;
}

enum class Errc {
    InvalidArgument,
    NonHermitian,
    DidNotConverge,
    DefectiveMatrix,
    RankDeficient,
    NonPositiveSpacing,
    NonIntegerMultiple,
    IllConditionedT,
    TinyDenominator,
    DegeneratePolarization,
    NoFeasibleInteger,
    InfeasibleDirection,
    IoFailure,
};

const char* to_string(Errc code);

/// Error raised by any library operation. `stage()` names the operation
/// that failed, so pipeline callers can attribute failures.
class Error : public std::runtime_error {
public:
    Error(Errc code, std::string stage, const std::string& what)
        : std::runtime_error(stage + ": " + what), code_(code), stage_(std::move(stage)) {}

    Errc code() const noexcept { return code_; }
    const std::string& stage() const noexcept { return stage_; }

private:
    Errc code_;
    std::string stage_;
};

}  // namespace ste
