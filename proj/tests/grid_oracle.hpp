#pragma once

#include "ste/estimator.hpp"
#include "ste/manifold.hpp"

#include <cmath>

namespace testutil {

struct GridPeak {
    double theta1 = 0.0;
    double theta2 = 0.0;
};

/// Exhaustive correlation-maximizing DOA search against a subspace vector
/// v, on a uniform (theta1, theta2) grid. The steering vector is linear in
/// the polarization vector [sin t3 e^{j t4}; cos t3], whose basis has
/// orthonormal columns, so the per-point polarization optimum is closed
/// form and the score reduces to the projection norm.
inline GridPeak grid_search_doa(const ste::CVec& v, const ste::ArrayLayout& layout,
                                double lambda, double step_deg) {
    using namespace ste;
    const double step = step_deg * pi / 180.0;
    const int n1 = static_cast<int>(std::lround(two_pi / step));
    const int n2 = static_cast<int>(std::lround(pi / 2 / step));
    GridPeak best;
    double best_score = -1.0;
    for (int i1 = 0; i1 < n1; ++i1) {
        const double t1 = i1 * step;
        for (int i2 = 0; i2 <= n2; ++i2) {
            const double t2 = i2 * step;
            const auto [ux, uy] = direction_cosines(t1, t2);
            Eigen::Matrix<cxd, 3, 2> b;
            b << std::cos(t1) * std::sin(t2), -std::sin(t1),
                 std::sin(t1) * std::sin(t2),  std::cos(t1),
                -std::cos(t2), 0.0;
            const double cyc = two_pi / lambda;
            const cxd p1 = cis(-cyc * layout.d1() * uy);
            const cxd p2 = cis(-cyc * (layout.d1() + layout.d2()) * uy);
            const cxd qy = cis(-cyc * layout.delta_y * uy);
            const cxd qx = cis(-cyc * layout.delta_x * ux);
            Vec9c phases;
            phases << 1.0, p1, p2, qy, qy * p1, qy * p2, qx, qx * p1, qx * p2;
            Eigen::Matrix<cxd, 9, 2> bb;
            for (int blk = 0; blk < 3; ++blk) bb.middleRows<3>(3 * blk) = b;
            const Eigen::Matrix<cxd, 9, 2> a = phases.asDiagonal() * bb;
            const double score = (a.adjoint() * v).norm();
            if (score > best_score) {
                best_score = score;
                best = {t1, t2};
            }
        }
    }
    return best;
}

}  // namespace testutil
