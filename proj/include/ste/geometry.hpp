#pragma once

#include "ste/types.hpp"

#include <array>

namespace ste {

enum class TriadKind { DipoleTriad, LoopTriad };

/// Sparse array of three spatially spread triads. Lengths are in units of
/// the reference wavelength (the minimum source wavelength). The intra-triad
/// spacings are locked to integer multiples of the inter-triad spacing
/// along y: d1 = m1 * delta_y, d2 = m2 * delta_y.
struct ArrayLayout {
    TriadKind kind = TriadKind::DipoleTriad;
    double delta_y = 0.0;
    double delta_x = 0.0;
    int m1 = 0;
    int m2 = 0;

    double d1() const { return m1 * delta_y; }
    double d2() const { return m2 * delta_y; }
};

/// Validate raw fields and build a layout. Throws NonPositiveSpacing.
ArrayLayout make_layout(TriadKind kind, double delta_y, double delta_x, int m1, int m2);

/// Same, with d1/d2 given directly; they must be exact positive-integer
/// multiples of delta_y (throws NonIntegerMultiple otherwise).
ArrayLayout make_layout_from_spacings(TriadKind kind, double delta_y, double delta_x,
                                      double d1, double d2);

/// Positions of the nine antennas on the x-y plane, in reference
/// wavelengths. Order matches the steering-vector blocks: triad 1, triad 2
/// (shifted by delta_y along y), triad 3 (shifted by delta_x along x);
/// within a triad the x-, y-, z-oriented elements sit at y-offsets
/// {0, d1, d1+d2}.
std::array<Vec3d, 9> element_positions(const ArrayLayout& layout);

}  // namespace ste
