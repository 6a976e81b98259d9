#include "shapebo/linalg.hpp"

#include <cmath>
#include <sstream>

namespace shapebo {

JitteredCholesky::JitteredCholesky(const Matrix& a, double scale) {
    if (a.rows() != a.cols()) {
        throw ArgumentError("cholesky of a non-square matrix");
    }
    if (!(scale > 0.0) || !std::isfinite(scale)) {
        throw NumericalError("non-positive or non-finite jitter scale");
    }
    if (a.rows() == 0) {
        jitter_ = 0.0;
        llt_.compute(a);
        return;
    }
    Matrix work = a;
    double jitter = kJitter * scale;
    for (;;) {
        work.diagonal() = a.diagonal().array() + jitter;
        llt_.compute(work);
        if (llt_.info() == Eigen::Success) {
            const auto d = llt_.matrixLLT().diagonal();
            if ((d.array() > 0.0).all() && d.allFinite()) {
                jitter_ = jitter;
                return;
            }
        }
        jitter *= 10.0;
        if (jitter > 1e-3 * scale * 1.0000001) {
            std::ostringstream msg;
            msg << "covariance matrix of size " << a.rows()
                << " is not positive definite after jitter " << jitter / 10.0;
            throw NumericalError(msg.str());
        }
    }
}

double JitteredCholesky::log_det() const {
    return 2.0 * llt_.matrixLLT().diagonal().array().log().sum();
}

double diagonal_scale(const Matrix& a) {
    if (a.rows() == 0) {
        return 1.0;
    }
    const double m = a.diagonal().mean();
    return (std::isfinite(m) && m > 1e-300) ? m : 1e-300;
}

}  // namespace shapebo
