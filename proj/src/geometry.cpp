#include "ste/geometry.hpp"

#include <cmath>

namespace ste {

ArrayLayout make_layout(TriadKind kind, double delta_y, double delta_x, int m1, int m2) {
    constexpr const char* stage = "make_layout";
    if (!(delta_y > 0.0) || !(delta_x > 0.0))
        throw Error(Errc::NonPositiveSpacing, stage, "delta_x and delta_y must be positive");
    if (m1 < 1 || m2 < 1)
        throw Error(Errc::NonPositiveSpacing, stage, "m1 and m2 must be positive integers");
    return ArrayLayout{kind, delta_y, delta_x, m1, m2};
}

ArrayLayout make_layout_from_spacings(TriadKind kind, double delta_y, double delta_x,
                                      double d1, double d2) {
    constexpr const char* stage = "make_layout";
    if (!(delta_y > 0.0) || !(delta_x > 0.0))
        throw Error(Errc::NonPositiveSpacing, stage, "delta_x and delta_y must be positive");
    auto as_multiple = [&](double d, const char* name) {
        const double ratio = d / delta_y;
        const double rounded = std::round(ratio);
        if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-9 * std::max(1.0, std::abs(ratio)))
            throw Error(Errc::NonIntegerMultiple, stage,
                        std::string(name) + " must be a positive integer multiple of delta_y");
        return static_cast<int>(rounded);
    };
    return ArrayLayout{kind, delta_y, delta_x, as_multiple(d1, "d1"), as_multiple(d2, "d2")};
}

std::array<Vec3d, 9> element_positions(const ArrayLayout& layout) {
    const double d1 = layout.d1();
    const double d12 = layout.d1() + layout.d2();
    std::array<Vec3d, 9> pos;
    // Triad 1 on the y-axis.
    pos[0] = {0.0, 0.0, 0.0};
    pos[1] = {0.0, d1, 0.0};
    pos[2] = {0.0, d12, 0.0};
    // Triad 2, displaced by delta_y along y.
    pos[3] = {0.0, layout.delta_y, 0.0};
    pos[4] = {0.0, layout.delta_y + d1, 0.0};
    pos[5] = {0.0, layout.delta_y + d12, 0.0};
    // Triad 3, displaced by delta_x along x, same y-offsets as triad 1.
    pos[6] = {layout.delta_x, 0.0, 0.0};
    pos[7] = {layout.delta_x, d1, 0.0};
    pos[8] = {layout.delta_x, d12, 0.0};
    return pos;
}

}  // namespace ste
