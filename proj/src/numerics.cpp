#include "ste/numerics.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <numeric>
#include <vector>

namespace ste {

const char* to_string(Errc code) {
    switch (code) {
        case Errc::InvalidArgument: return "InvalidArgument";
        case Errc::NonHermitian: return "NonHermitian";
        case Errc::DidNotConverge: return "DidNotConverge";
        case Errc::DefectiveMatrix: return "DefectiveMatrix";
        case Errc::RankDeficient: return "RankDeficient";
        case Errc::NonPositiveSpacing: return "NonPositiveSpacing";
        case Errc::NonIntegerMultiple: return "NonIntegerMultiple";
        case Errc::IllConditionedT: return "IllConditionedT";
        case Errc::TinyDenominator: return "TinyDenominator";
        case Errc::DegeneratePolarization: return "DegeneratePolarization";
        case Errc::NoFeasibleInteger: return "NoFeasibleInteger";
        case Errc::InfeasibleDirection: return "InfeasibleDirection";
        case Errc::IoFailure: return "IoFailure";
    }
    return "UnknownError";
}

namespace {

void require_finite(const Eigen::Ref<const CMat>& a, const char* stage) {
    if (!a.allFinite()) throw Error(Errc::InvalidArgument, stage, "matrix has non-finite entries");
}

// Rotate each column so its largest-magnitude entry is real positive.
void normalize_phases(CMat& v) {
    for (Eigen::Index c = 0; c < v.cols(); ++c) {
        Eigen::Index imax = 0;
        v.col(c).cwiseAbs().maxCoeff(&imax);
        const cxd pivot = v(imax, c);
        const double mag = std::abs(pivot);
        if (mag > 0.0) v.col(c) *= std::conj(pivot) / mag;
    }
}

}  // namespace

EigenPair eig_hermitian(const Eigen::Ref<const CMat>& a) {
    constexpr const char* stage = "eig_hermitian";
    if (a.rows() != a.cols()) throw Error(Errc::InvalidArgument, stage, "matrix is not square");
    if (a.rows() > 16) throw Error(Errc::InvalidArgument, stage, "dimension exceeds 16");
    require_finite(a, stage);

    const double norm = a.norm();
    if ((a - a.adjoint()).norm() > 1e-9 * std::max(norm, 1e-300))
        throw Error(Errc::NonHermitian, stage, "||A - A^H|| exceeds 1e-9 ||A||");

    const CMat sym = 0.5 * (a + a.adjoint());
    Eigen::SelfAdjointEigenSolver<CMat> solver(sym);
    if (solver.info() != Eigen::Success)
        throw Error(Errc::DidNotConverge, stage, "eigen iteration did not converge");

    const Eigen::Index n = a.rows();
    EigenPair out;
    out.values.resize(n);
    out.vectors.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {  // ascending -> descending
        out.values(i) = cxd(solver.eigenvalues()(n - 1 - i), 0.0);
        out.vectors.col(i) = solver.eigenvectors().col(n - 1 - i);
    }
    normalize_phases(out.vectors);
    return out;
}

EigenPair eig_general_small(const Eigen::Ref<const CMat>& a) {
    constexpr const char* stage = "eig_general_small";
    if (a.rows() != a.cols()) throw Error(Errc::InvalidArgument, stage, "matrix is not square");
    const Eigen::Index n = a.rows();
    if (n < 1 || n > 4) throw Error(Errc::InvalidArgument, stage, "dimension must be 1..4");
    require_finite(a, stage);

    EigenPair out;
    if (n == 1) {
        out.values = CVec::Constant(1, a(0, 0));
        out.vectors = CMat::Ones(1, 1);
        return out;
    }

    Eigen::ComplexEigenSolver<CMat> solver(a, /*computeEigenvectors=*/true);
    if (solver.info() != Eigen::Success)
        throw Error(Errc::DidNotConverge, stage, "eigen iteration did not converge");

    out.values = solver.eigenvalues();
    out.vectors = solver.eigenvectors();
    for (Eigen::Index c = 0; c < n; ++c) out.vectors.col(c).normalize();
    normalize_phases(out.vectors);

    const double norm = std::max(a.norm(), 1e-300);
    for (Eigen::Index c = 0; c < n; ++c) {
        const double residual = (a * out.vectors.col(c) - out.values(c) * out.vectors.col(c)).norm();
        if (residual > 1e-8 * norm)
            throw Error(Errc::DefectiveMatrix, stage, "eigenvector residual exceeds 1e-8 ||A||");
    }
    // A deficient eigenspace shows up as nearly parallel eigenvector columns.
    Eigen::JacobiSVD<CMat> svd(out.vectors);
    if (svd.singularValues()(n - 1) <= 1e-12 * svd.singularValues()(0))
        throw Error(Errc::DefectiveMatrix, stage, "eigenvector basis is numerically singular");
    return out;
}

CMat lstsq(const Eigen::Ref<const CMat>& a, const Eigen::Ref<const CMat>& b) {
    constexpr const char* stage = "lstsq";
    if (a.rows() != b.rows()) throw Error(Errc::InvalidArgument, stage, "row counts differ");
    require_finite(a, stage);
    require_finite(b, stage);

    Eigen::JacobiSVD<CMat> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    if (sv.size() == 0 || sv(sv.size() - 1) <= 1e-12 * sv(0))
        throw Error(Errc::RankDeficient, stage, "matrix does not have full column rank");
    return svd.solve(b);
}

CMat pinv(const Eigen::Ref<const CMat>& a) {
    require_finite(a, "pinv");
    Eigen::JacobiSVD<CMat> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    if (sv.size() == 0) return CMat::Zero(a.cols(), a.rows());
    const double cutoff = 1e-12 * sv(0);
    Eigen::VectorXd inv = Eigen::VectorXd::Zero(sv.size());
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv(i) > cutoff) inv(i) = 1.0 / sv(i);
    return svd.matrixV() * inv.asDiagonal() * svd.matrixU().adjoint();
}

}  // namespace ste
