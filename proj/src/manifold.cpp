#include "ste/manifold.hpp"

#include <cmath>

namespace ste {

void validate(const SourceParams& p) {
    constexpr const char* stage = "source_params";
    if (!(p.theta1 >= 0.0 && p.theta1 < two_pi))
        throw Error(Errc::InvalidArgument, stage, "theta1 must lie in [0, 2*pi)");
    if (!(p.theta2 >= 0.0 && p.theta2 <= pi / 2))
        throw Error(Errc::InvalidArgument, stage, "theta2 must lie in [0, pi/2]");
    if (!(p.theta3 >= 0.0 && p.theta3 <= pi / 2))
        throw Error(Errc::InvalidArgument, stage, "theta3 must lie in [0, pi/2]");
    if (!(p.theta4 >= -pi && p.theta4 < pi))
        throw Error(Errc::InvalidArgument, stage, "theta4 must lie in [-pi, pi)");
    if (!(p.wavelength > 0.0))
        throw Error(Errc::InvalidArgument, stage, "wavelength must be positive");
}

DirectionCosines direction_cosines(double theta1, double theta2) {
    return {std::cos(theta2) * std::cos(theta1), std::cos(theta2) * std::sin(theta1)};
}

Vec3c e_field(const SourceParams& p) {
    const double c1 = std::cos(p.theta1), s1 = std::sin(p.theta1);
    const double c3 = std::cos(p.theta3), s3 = std::sin(p.theta3);
    const cxd g = s3 * cis(p.theta4);
    Vec3c e;
    e(0) = c1 * std::sin(p.theta2) * g - s1 * c3;
    e(1) = s1 * std::sin(p.theta2) * g + c1 * c3;
    e(2) = -std::cos(p.theta2) * g;
    return e;
}

Vec3c h_field(const SourceParams& p) {
    const double c1 = std::cos(p.theta1), s1 = std::sin(p.theta1);
    const double c3 = std::cos(p.theta3), s3 = std::sin(p.theta3);
    const cxd g = s3 * cis(p.theta4);
    Vec3c h;
    h(0) = -s1 * g - c1 * std::sin(p.theta2) * c3;
    h(1) = c1 * g - s1 * std::sin(p.theta2) * c3;
    h(2) = std::cos(p.theta2) * c3;
    return h;
}

Vec3c triad_manifold(const SourceParams& p, const ArrayLayout& layout) {
    const Vec3c field = layout.kind == TriadKind::DipoleTriad ? e_field(p) : h_field(p);
    const double u_y = direction_cosines(p.theta1, p.theta2).u_y;
    const double cycles = two_pi * u_y / p.wavelength;
    Vec3c a;
    a(0) = field(0);
    a(1) = cis(-cycles * layout.d1()) * field(1);
    a(2) = cis(-cycles * (layout.d1() + layout.d2())) * field(2);
    return a;
}

Vec9c full_steering(const SourceParams& p, const ArrayLayout& layout) {
    const Vec3c a_nc = triad_manifold(p, layout);
    const auto [u_x, u_y] = direction_cosines(p.theta1, p.theta2);
    const cxd q_y = cis(-two_pi * layout.delta_y * u_y / p.wavelength);
    const cxd q_x = cis(-two_pi * layout.delta_x * u_x / p.wavelength);
    Vec9c a;
    a.segment<3>(0) = a_nc;
    a.segment<3>(3) = q_y * a_nc;
    a.segment<3>(6) = q_x * a_nc;
    return a;
}

Vec3d poynting(const SourceParams& p) {
    const Vec3c e = e_field(p);
    const Vec3c hc = h_field(p).conjugate();
    const Vec3c cross = e.cross(hc);
    return cross.real();
}

}  // namespace ste
