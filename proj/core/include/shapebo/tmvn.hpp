#pragma once

#include "shapebo/types.hpp"

#include <cstdint>

namespace shapebo {

/// The box carries (numerically) no probability mass.
class InfeasibleBox : public NumericalError {
public:
    InfeasibleBox(const std::string& what, Index tightest, double log_prob)
        : NumericalError(what), tightest_(tightest), log_prob_(log_prob) {}

    /// Coordinate whose marginal box probability is smallest.
    Index tightest_coordinate() const { return tightest_; }
    double log_prob() const { return log_prob_; }

private:
    Index tightest_;
    double log_prob_;
};

struct TmvnResult {
    /// count x m, one draw per row.
    Matrix draws;
    /// Estimated acceptance probability of the tilted accept-reject proposal.
    double acceptance_rate = 1.0;
    /// Importance-sampling estimate of log P(lower <= X <= upper).
    double log_prob = 0.0;
    bool used_gibbs = false;
};

inline constexpr double kGibbsFallbackRate = 1e-4;

/// Auto picks tilted accept-reject or Gibbs as described below; Gibbs forces
/// the fallback (for m >= 2).
enum class TmvnMethod { Auto, Gibbs };
inline constexpr double kInfeasibleLogProb = -700.0;

/// Draws from N(mean, cov) restricted to the box [lower, upper].
///
/// Primary route is separation-of-variables accept-reject with minimax
/// exponential tilting: variables are reordered greedily, the tilting
/// parameters solve the saddlepoint equations of the log-weight, and proposals
/// are accepted against the saddlepoint bound, so accepted draws are exact.
/// When the estimated acceptance rate falls below kGibbsFallbackRate the
/// sampler switches to systematic-scan Gibbs over the univariate truncated
/// conditionals, keeping one draw per 10 m coordinate updates.
///
/// Throws InfeasibleBox when the estimated log-probability of the box is below
/// kInfeasibleLogProb, and ArgumentError for malformed inputs.
TmvnResult sample_tmvn(const Vector& mean, const Matrix& cov, const Vector& lower,
                       const Vector& upper, std::size_t count, std::uint64_t seed,
                       TmvnMethod method = TmvnMethod::Auto);

}  // namespace shapebo
