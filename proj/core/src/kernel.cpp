#include "shapebo/kernel.hpp"

#include <cmath>
#include <string>

namespace shapebo {

void HyperParams::validate() const {
    if (!(signal_var_tau2 > 0.0) || !std::isfinite(signal_var_tau2)) {
        throw ArgumentError("signal_var_tau2 must be positive and finite");
    }
    if (!(noise_var_sigma2 >= 0.0) || !std::isfinite(noise_var_sigma2)) {
        throw ArgumentError("noise_var_sigma2 must be nonnegative and finite");
    }
    if (!std::isfinite(mean_mu)) {
        throw ArgumentError("mean_mu must be finite");
    }
    if (lengthscale_prec_psi.size() == 0) {
        throw ArgumentError("lengthscale_prec_psi must have at least one entry");
    }
    for (Index i = 0; i < lengthscale_prec_psi.size(); ++i) {
        const double p = lengthscale_prec_psi(i);
        if (!(p > 0.0) || !std::isfinite(p)) {
            throw ArgumentError("lengthscale_prec_psi[" + std::to_string(i) + "] must be positive");
        }
    }
}

namespace {

void check_dims(const Vector& x, const Vector& x2, const HyperParams& theta) {
    if (x.size() != theta.dim() || x2.size() != theta.dim()) {
        throw ArgumentError("point dimension " + std::to_string(x.size()) + "/" +
                            std::to_string(x2.size()) + " does not match hyperparameter dimension " +
                            std::to_string(theta.dim()));
    }
}

void check_partial(const Partial& p, Index d) {
    if (p.order < 0 || p.order > kMaxDerivativeOrder) {
        throw UnsupportedOrder("derivative order " + std::to_string(p.order) +
                               " not supported (max " + std::to_string(kMaxDerivativeOrder) + ")");
    }
    if (p.order > 0 && (p.dim < 0 || p.dim >= d)) {
        throw ArgumentError("derivative dimension " + std::to_string(p.dim) + " out of range");
    }
}

// n-th derivative of exp(-psi r^2) with respect to r, divided by exp(-psi r^2).
double gauss_deriv_factor(int n, double psi, double r) {
    const double pr = psi * r;
    switch (n) {
        case 0: return 1.0;
        case 1: return -2.0 * pr;
        case 2: return 4.0 * pr * pr - 2.0 * psi;
        case 3: return -8.0 * pr * pr * pr + 12.0 * psi * pr;
        case 4: {
            const double pr2 = pr * pr;
            return 16.0 * pr2 * pr2 - 48.0 * psi * pr2 + 12.0 * psi * psi;
        }
        default: throw UnsupportedOrder("combined derivative order above 4");
    }
}

double sq_exponent(const Vector& x, const Vector& x2, const Vector& psi) {
    double s = 0.0;
    for (Index i = 0; i < x.size(); ++i) {
        const double r = x(i) - x2(i);
        s += psi(i) * r * r;
    }
    return s;
}

// Derivative in x' equals minus the derivative in r = x - x', hence the sign flip
// for odd right orders.
double deriv_unchecked(const Vector& x, const Vector& x2, const Partial& left,
                       const Partial& right, const HyperParams& theta) {
    const Vector& psi = theta.lengthscale_prec_psi;
    const double base = theta.signal_var_tau2 * std::exp(-sq_exponent(x, x2, psi));
    if (left.order == 0 && right.order == 0) {
        return base;
    }
    const double sign = (right.order % 2 == 0) ? 1.0 : -1.0;
    if (left.order == 0) {
        const int k = right.dim;
        return base * sign * gauss_deriv_factor(right.order, psi(k), x(k) - x2(k));
    }
    if (right.order == 0) {
        const int j = left.dim;
        return base * gauss_deriv_factor(left.order, psi(j), x(j) - x2(j));
    }
    if (left.dim == right.dim) {
        const int j = left.dim;
        return base * sign * gauss_deriv_factor(left.order + right.order, psi(j), x(j) - x2(j));
    }
    const int j = left.dim;
    const int k = right.dim;
    return base * gauss_deriv_factor(left.order, psi(j), x(j) - x2(j)) * sign *
           gauss_deriv_factor(right.order, psi(k), x(k) - x2(k));
}

}  // namespace

double se_cov(const Vector& x, const Vector& x2, const HyperParams& theta) {
    check_dims(x, x2, theta);
    return theta.signal_var_tau2 * std::exp(-sq_exponent(x, x2, theta.lengthscale_prec_psi));
}

double se_cov_deriv(const Vector& x, const Vector& x2, const std::optional<Partial>& left,
                    const std::optional<Partial>& right, const HyperParams& theta) {
    check_dims(x, x2, theta);
    const Partial l = left.value_or(Partial{});
    const Partial r = right.value_or(Partial{});
    check_partial(l, theta.dim());
    check_partial(r, theta.dim());
    return deriv_unchecked(x, x2, l, r, theta);
}

Matrix assemble_cov_matrix(std::span<const Coordinate> rows, std::span<const Coordinate> cols,
                           const HyperParams& theta) {
    for (const auto& c : rows) {
        check_dims(c.point, c.point, theta);
        check_partial(c.partial, theta.dim());
    }
    for (const auto& c : cols) {
        check_dims(c.point, c.point, theta);
        check_partial(c.partial, theta.dim());
    }
    Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(cols.size()));
    for (std::size_t a = 0; a < rows.size(); ++a) {
        for (std::size_t b = 0; b < cols.size(); ++b) {
            m(static_cast<Index>(a), static_cast<Index>(b)) =
                deriv_unchecked(rows[a].point, cols[b].point, rows[a].partial, cols[b].partial, theta);
        }
    }
    return m;
}

Matrix assemble_cov_matrix(std::span<const Coordinate> layout, const HyperParams& theta) {
    for (const auto& c : layout) {
        check_dims(c.point, c.point, theta);
        check_partial(c.partial, theta.dim());
    }
    const auto n = static_cast<Index>(layout.size());
    Matrix m(n, n);
    for (Index a = 0; a < n; ++a) {
        for (Index b = 0; b <= a; ++b) {
            const double v = deriv_unchecked(layout[a].point, layout[b].point, layout[a].partial,
                                             layout[b].partial, theta);
            m(a, b) = v;
            m(b, a) = v;
        }
    }
    return m;
}

}  // namespace shapebo
