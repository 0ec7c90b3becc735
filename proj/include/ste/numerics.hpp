#pragma once

#include "ste/types.hpp"

namespace ste {

/// Eigen-decomposition result. Columns of `vectors` are unit-norm
/// eigenvectors, phase-normalized so the largest-magnitude entry of each
/// column is real and positive.
struct EigenPair {
    CVec values;
    CMat vectors;
};

/// Eigen-decomposition of a Hermitian matrix (dimension <= 16).
/// Eigenvalues are real (zero imaginary part) and sorted descending;
/// eigenvectors are orthonormal. Throws NonHermitian if
/// ||A - A^H|| > 1e-9 ||A||, DidNotConverge on solver failure.
EigenPair eig_hermitian(const Eigen::Ref<const CMat>& a);

/// Eigen-decomposition of a general complex matrix of dimension 1..4.
/// Throws DefectiveMatrix when no eigenvector basis reaches the residual
/// tolerance 1e-8 ||A|| (repeated eigenvalue with deficient eigenspace).
EigenPair eig_general_small(const Eigen::Ref<const CMat>& a);

/// Least squares: X minimizing ||A X - B||. Requires A to have full
/// column rank (smallest/largest singular value > 1e-12), else throws
/// RankDeficient.
CMat lstsq(const Eigen::Ref<const CMat>& a, const Eigen::Ref<const CMat>& b);

/// Moore-Penrose pseudo-inverse with singular values below
/// 1e-12 * sigma_max treated as zero. Never throws on rank deficiency.
CMat pinv(const Eigen::Ref<const CMat>& a);

}  // namespace ste
