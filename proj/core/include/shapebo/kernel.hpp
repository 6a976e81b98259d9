#pragma once

#include "shapebo/types.hpp"

#include <optional>
#include <span>
#include <vector>

namespace shapebo {

/// Parameters of the GP surrogate with a squared-exponential kernel
///
///   k(x, x') = tau2 * exp(-sum_i psi_i (x_i - x'_i)^2)
///
/// plus a constant mean and iid Gaussian observation noise.
struct HyperParams {
    double mean_mu = 0.0;
    double signal_var_tau2 = 1.0;
    double noise_var_sigma2 = 0.0;
    Vector lengthscale_prec_psi;

    Index dim() const { return lengthscale_prec_psi.size(); }

    /// Throws ArgumentError unless tau2 > 0, sigma2 >= 0 and every psi > 0.
    void validate() const;
};

/// Selects the `order`-th partial derivative along coordinate `dim`.
/// Order 0 means the process value itself.
struct Partial {
    int dim = 0;
    int order = 0;
};

/// One coordinate of a joint Gaussian over function values and partial
/// derivatives: the derivative `partial` of f evaluated at `point`.
struct Coordinate {
    Vector point;
    Partial partial;

    static Coordinate value(Vector p) { return {std::move(p), {0, 0}}; }
    static Coordinate derivative(Vector p, int dim, int order) {
        return {std::move(p), {dim, order}};
    }

    bool is_value() const { return partial.order == 0; }
};

/// A derivative coordinate; `partial.order` must be 1 or 2.
using DerivRequest = Coordinate;

/// Thrown for derivative orders outside {0, 1, 2}.
class UnsupportedOrder : public ArgumentError {
public:
    using ArgumentError::ArgumentError;
};

inline constexpr int kMaxDerivativeOrder = 2;

double se_cov(const Vector& x, const Vector& x2, const HyperParams& theta);

/// Cov(d^o f / dx_j^o (x), d^o' f / dx'_k^o' (x2)), the mixed partial of the
/// SE kernel. An empty optional (or order 0) leaves that side undifferentiated.
double se_cov_deriv(const Vector& x, const Vector& x2,
                    const std::optional<Partial>& left,
                    const std::optional<Partial>& right,
                    const HyperParams& theta);

/// M(a, b) = se_cov_deriv(rows[a], cols[b]).
Matrix assemble_cov_matrix(std::span<const Coordinate> rows,
                           std::span<const Coordinate> cols,
                           const HyperParams& theta);

/// Symmetric version for a single layout; fills only the lower triangle and
/// mirrors it.
Matrix assemble_cov_matrix(std::span<const Coordinate> layout, const HyperParams& theta);

}  // namespace shapebo
