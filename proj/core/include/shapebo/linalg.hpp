#pragma once

#include "shapebo/types.hpp"

#include <Eigen/Cholesky>

namespace shapebo {

/// Relative diagonal jitter applied before every covariance factorization.
inline constexpr double kJitter = 1e-8;

/// Cholesky factor of a symmetric PSD matrix with diagonal jitter.
///
/// The first attempt adds `kJitter * scale` to the diagonal. If that is not
/// numerically positive definite the jitter grows tenfold per retry up to
/// `1e-3 * scale`, after which NumericalError is thrown.
class JitteredCholesky {
public:
    JitteredCholesky() = default;
    JitteredCholesky(const Matrix& a, double scale);

    const Eigen::LLT<Matrix>& llt() const { return llt_; }
    Matrix matrix_l() const { return llt_.matrixL(); }
    double jitter() const { return jitter_; }
    Index size() const { return llt_.rows(); }

    Vector solve(const Vector& b) const { return llt_.solve(b); }
    Matrix solve(const Matrix& b) const { return llt_.solve(b); }

    double log_det() const;

private:
    Eigen::LLT<Matrix> llt_;
    double jitter_ = 0.0;
};

/// Mean of the diagonal, floored at a tiny positive value. Used as the jitter
/// scale for posterior covariances whose blocks have different units.
double diagonal_scale(const Matrix& a);

}  // namespace shapebo
