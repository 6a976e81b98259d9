#pragma once

#include "shapebo/kernel.hpp"
#include "shapebo/types.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace shapebo {

/// n observations y_i = f(x_i) + eps_i; rows of `points` are the x_i.
struct Dataset {
    Matrix points;
    Vector values;

    Index size() const { return values.size(); }
    Index dim() const { return points.cols(); }

    void validate() const;
};

/// Joint Gaussian over an ordered list of value/derivative coordinates.
struct JointGaussian {
    Vector mean;
    Matrix cov;
    std::vector<Coordinate> layout;

    Index size() const { return mean.size(); }

    /// Marginal over a subset of coordinates, in the given order.
    JointGaussian marginal(std::span<const Index> idx) const;
};

/// Independent priors on the hyperparameters: Cauchy(0, mu_scale) on the
/// mean and half-Cauchy(0, scale) on tau2, sigma2 and each psi_j. Scales are
/// in standardized units (unit input box, unit-variance outputs).
struct PriorConfig {
    double mu_scale = 1.0;
    double tau2_scale = 0.25;
    double sigma2_scale = 0.25;
    double psi_scale = 5.0;

    void validate() const;

    /// Log prior density of theta (in its natural parameterization).
    double log_density(const HyperParams& theta) const;
};

/// The chain stalled: no proposal after burn-in was accepted.
class SamplerError : public NumericalError {
public:
    SamplerError(const std::string& what, double acceptance_rate)
        : NumericalError(what), acceptance_rate_(acceptance_rate) {}
    double acceptance_rate() const { return acceptance_rate_; }

private:
    double acceptance_rate_;
};

struct FitResult {
    HyperParams params;
    /// Post-burn-in acceptance rate of the Metropolis chain.
    double acceptance_rate = 0.0;
    std::size_t draws = 0;
};

inline constexpr std::size_t kDefaultChainLength = 20000;
inline constexpr std::size_t kDefaultBurnIn = 5000;

/// Mean mu on value coordinates, 0 on derivative coordinates; covariance from
/// the SE derivative kernel.
JointGaussian prior_joint(std::vector<Coordinate> layout, const HyperParams& theta);

/// log N(y; 1 mu, K + sigma2 I) via Cholesky.
double marginal_loglik(const HyperParams& theta, const Dataset& data);

/// Partial-likelihood hyperparameter fit: adaptive random-walk Metropolis on
/// (mu, log tau2, log sigma2, log psi_1..d) targeting marginal_loglik plus the
/// log priors, returning the coordinatewise posterior median of the
/// post-burn-in draws.
///
/// Outputs are standardized internally (mean 0, sd 1; sd taken as 1 with fewer
/// than two distinct values) so the priors act on a fixed scale. The returned
/// parameters are in the caller's output units. Input points are used as given;
/// the BO loop feeds unit-box coordinates.
FitResult fit_hyperparams(const Dataset& data, const PriorConfig& priors,
                          std::size_t chain_len = kDefaultChainLength,
                          std::size_t burn_in = kDefaultBurnIn, std::uint64_t seed = 0);

/// Law of the coordinates not in `obs_idx`, given `y` observed at `obs_idx`
/// with iid N(0, sigma2) noise. `obs_idx` must name value coordinates.
JointGaussian condition(const JointGaussian& prior, std::span<const Index> obs_idx,
                        const Vector& y, double sigma2);

}  // namespace shapebo
