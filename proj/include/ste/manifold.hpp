#pragma once

#include "ste/geometry.hpp"
#include "ste/types.hpp"

namespace ste {

/// Direction and polarization of one narrowband source.
///   theta1  azimuth, [0, 2*pi)
///   theta2  elevation, [0, pi/2]
///   theta3  auxiliary polarization angle, [0, pi/2]
///   theta4  polarization phase difference, [-pi, pi)
///   wavelength  in reference-wavelength units, > 0
struct SourceParams {
    double theta1 = 0.0;
    double theta2 = 0.0;
    double theta3 = 0.0;
    double theta4 = 0.0;
    double wavelength = 1.0;
};

/// Throws InvalidArgument if any field is outside its range.
void validate(const SourceParams& p);

struct DirectionCosines {
    double u_x = 0.0;
    double u_y = 0.0;
};

/// u_x = cos(theta2) cos(theta1), u_y = cos(theta2) sin(theta1).
DirectionCosines direction_cosines(double theta1, double theta2);

/// Unit-norm electric-field response measured by x/y/z oriented dipoles.
Vec3c e_field(const SourceParams& p);

/// Unit-norm magnetic-field response measured by x/y/z oriented loops.
Vec3c h_field(const SourceParams& p);

/// Field response of one spatially spread triad: element i carries the
/// propagation phase e^{-j 2 pi u_y off_i / lambda} for its y-offset
/// off_i in {0, d1, d1+d2}. Selects e_field or h_field by layout.kind.
Vec3c triad_manifold(const SourceParams& p, const ArrayLayout& layout);

/// Full 9x1 steering vector, blocks [a_nc; q_y a_nc; q_x a_nc] with
/// q_y = e^{-j 2 pi delta_y u_y / lambda}, q_x = e^{-j 2 pi delta_x u_x / lambda}.
Vec9c full_steering(const SourceParams& p, const ArrayLayout& layout);

/// Cross product e x conj(h). Equals (u_x, u_y, sin(theta2)) for every
/// valid parameter set; used as an independent consistency oracle.
Vec3d poynting(const SourceParams& p);

}  // namespace ste
