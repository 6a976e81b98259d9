#pragma once

#include "shapebo/gp.hpp"
#include "shapebo/kernel.hpp"
#include "shapebo/types.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace shapebo {

/// Shape of the component functions x_j -> f(x_j, a) along one coordinate.
enum class Shape {
    None,
    MonotoneIncreasing,
    MonotoneDecreasing,
    Convex,
    Concave,
    Quasiconvex,
};

std::string_view to_string(Shape s);
/// Accepts the names printed by to_string ("none", "increasing", ...) plus a
/// few aliases; returns nullopt for anything else.
std::optional<Shape> parse_shape(std::string_view name);

/// Per-dimension shape declaration plus the points where derivative
/// constraints are enforced. The grid lives in the unit box.
struct ConstraintSpec {
    std::vector<Shape> per_dim;
    Index grid_size = 100;
    Matrix grid;

    Index dim() const { return static_cast<Index>(per_dim.size()); }
    bool active() const;
    bool has_quasiconvex() const;

    static ConstraintSpec unconstrained(Index d);
};

/// Rows of `lhs` followed by the rows of `observed` that are not already
/// present (exact duplicates are dropped so the derivative covariance stays
/// full rank).
Matrix enforcement_grid(const Matrix& lhs, const Matrix& observed);

enum class BoundKind {
    NonNegative,
    NonPositive,
    QuasiconvexPattern,
};

struct ConstraintRequest {
    DerivRequest coord;
    BoundKind bound;
};

/// Monotone -> first partials with a sign bound, convex/concave -> second
/// partials with a sign bound, quasiconvex -> first partials tagged for the
/// changepoint check. One request per grid point per constrained dimension,
/// dimensions in order.
std::vector<ConstraintRequest> build_derivative_requests(const ConstraintSpec& spec);

/// Derivatives with |value| <= this are compatible with either side of a
/// changepoint.
inline constexpr double kZeroDerivativeTol = 1e-12;

/// True iff some changepoint c puts every negative derivative strictly before
/// c and every positive derivative at or after it, i.e. the largest coordinate
/// carrying a negative derivative is below the smallest coordinate carrying a
/// positive one. Intended for ascending coordinates but valid for any order.
bool quasiconvex_pattern_ok(std::span<const double> coords, std::span<const double> derivs);

struct ConstrainedPosterior {
    JointGaussian posterior;
    /// s x p accepted draws of the value coordinates of `posterior`.
    Matrix samples;
    /// Layout index in `posterior` of each column of `samples`.
    std::vector<Index> value_idx;
    /// s x r derivative draws paired with `samples`, one column per request.
    Matrix derivative_samples;
    std::vector<ConstraintRequest> requests;
    /// Accepted / attempted joint draws in the rejection stage (1 without
    /// quasiconvex dimensions).
    double acceptance_rate = 1.0;
    /// Acceptance estimate of the truncated-normal stage (1 without sign
    /// constraints).
    double tmvn_acceptance = 1.0;
    bool used_gibbs = false;
    /// Draws come from sample_constrained_hmc rather than rejection.
    bool used_hmc = false;
};

/// Fewer than the requested number of draws passed the changepoint check.
class PartialSampleError : public NumericalError {
public:
    PartialSampleError(const std::string& what, ConstrainedPosterior partial)
        : NumericalError(what), partial_(std::move(partial)) {}
    const ConstrainedPosterior& partial() const { return partial_; }

private:
    ConstrainedPosterior partial_;
};

/// Draws value coordinates of `post` jointly with the derivatives named by
/// build_derivative_requests(spec), keeping only draws that satisfy every
/// constraint. Sign constraints go through sample_tmvn; the remaining
/// coordinates are drawn from their Gaussian law given the signed ones; draws
/// whose quasiconvex derivatives fail the changepoint check along any
/// constrained dimension are rejected. At most `max_tries` joint draws are
/// attempted.
ConstrainedPosterior sample_constrained_posterior(const JointGaussian& post, const ConstraintSpec& spec,
                                                  std::size_t count, std::uint64_t seed,
                                                  std::size_t max_tries);

struct HmcOptions {
    std::size_t burn_in = 100;
    /// Trajectories per stored draw.
    std::size_t thin = 2;
    /// Integration time per trajectory; pi/2 decorrelates an unconstrained
    /// Gaussian in one step.
    double travel_time = 1.5707963267948966;
    /// A trajectory stops early after this many wall events.
    std::size_t max_bounces = 20000;
};

/// MCMC route to the same constrained law for when rejection is hopeless.
/// Exact Hamiltonian dynamics of the whitened derivative block: sign bounds
/// are reflecting walls, and a quasiconvex derivative may cross zero only if
/// the changepoint pattern of its dimension stays valid, otherwise it
/// reflects. Values are then drawn from their Gaussian law given each
/// derivative draw. acceptance_rate is reported as 1.
ConstrainedPosterior sample_constrained_hmc(const JointGaussian& post, const ConstraintSpec& spec,
                                            std::size_t count, std::uint64_t seed,
                                            const HmcOptions& options = {});

}  // namespace shapebo
