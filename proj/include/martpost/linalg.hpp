#pragma once

#include <Eigen/Dense>

#include "martpost/errors.hpp"

namespace martpost {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Principal (symmetric PSD) square root of a symmetric positive
/// semi-definite matrix, via eigendecomposition.  Eigenvalues in
/// [-tol * max_eig, 0) are treated as zero roundoff; anything more negative
/// raises NumericalError, because a posterior covariance must be PSD.
inline Mat principal_sqrt(const Mat& m, double tol = 1e-12) {
    if (m.rows() != m.cols()) throw NumericalError("principal_sqrt: matrix is not square");
    Eigen::SelfAdjointEigenSolver<Mat> es(m);
    if (es.info() != Eigen::Success)
        throw NumericalError("principal_sqrt: eigendecomposition failed");
    Vec ev = es.eigenvalues();
    const double scale = std::max(ev.cwiseAbs().maxCoeff(), 1.0);
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        if (ev[i] < -tol * scale)
            throw NumericalError("principal_sqrt: eigenvalue " + std::to_string(ev[i]) +
                                 " below PSD tolerance");
        ev[i] = std::sqrt(std::max(ev[i], 0.0));
    }
    return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

/// True iff `m` is symmetric positive definite (tested by Cholesky).
inline bool is_positive_definite(const Mat& m) {
    if (m.rows() != m.cols()) return false;
    Eigen::LLT<Mat> llt(m);
    return llt.info() == Eigen::Success;
}

/// Smallest eigenvalue of a symmetric matrix.
inline double min_eigenvalue(const Mat& m) {
    Eigen::SelfAdjointEigenSolver<Mat> es(m, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success)
        throw NumericalError("min_eigenvalue: eigendecomposition failed");
    return es.eigenvalues().minCoeff();
}

}  // namespace martpost
