#pragma once

#include "shapebo/constraints.hpp"
#include "shapebo/gp.hpp"
#include "shapebo/types.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace shapebo {

/// Closed-form expected improvement for minimization under N(mu, sd^2).
double ei_closed(double mu, double sd, double best);

/// Monte-Carlo expected improvement: mean of max(best - sample, 0).
double ei_mc(std::span<const double> samples, double best);

/// Index of the smallest mean; the earliest index wins exact ties.
Index incumbent_index(std::span<const double> means);

/// Observed point with the smallest posterior expected objective value.
struct Incumbent {
    Index index = 0;  // position among the observed points
    Vector point;
    double posterior_expected_value = 0.0;
    /// Central 95% posterior interval of f at the incumbent.
    double lower95 = 0.0;
    double upper95 = 0.0;
};

/// Fitted GP surrogate. Points are unit-box coordinates; values are raw
/// objective values. `spec.grid` holds the enforcement points.
struct Surrogate {
    Dataset data;
    HyperParams theta;
    ConstraintSpec spec;
};

/// Posterior of f over a set of prediction points.
struct PosteriorSummary {
    Matrix points;
    Vector mean;
    Vector sd;
    Vector lower95;
    Vector upper95;
    /// s x p constrained draws; empty when the Gaussian posterior is used.
    Matrix samples;
    bool constrained = false;
    /// Rejection fell short and the draws come from sample_constrained_hmc.
    bool used_hmc = false;
    /// Both samplers fell short; the summary uses the rejection draws.
    bool partial = false;
    /// The constrained sampler returned nothing and the Gaussian posterior was
    /// used instead.
    bool unconstrained_fallback = false;
    std::optional<double> acceptance_rate;
};

/// Conditions the surrogate on its data and summarizes f at `points`. With an
/// active constraint spec the summary comes from `mc_samples` constrained
/// draws: rejection first, sample_constrained_hmc when rejection yields fewer
/// than `mc_samples` within `max_tries`. acceptance_rate is always the
/// rejection-stage rate.
PosteriorSummary predict(const Surrogate& s, const Matrix& points, std::size_t mc_samples,
                         std::uint64_t seed, std::size_t max_tries);

/// EI of each listed column of the summary: ei_mc on constrained draws,
/// ei_closed otherwise.
Vector ei_values(const PosteriorSummary& post, std::span<const Index> cols, double best);

struct Proposal {
    Index candidate = 0;
    Vector point;
    double ei = 0.0;
    /// Every EI was zero, so a random unqueried candidate was drawn.
    bool random_fallback = false;
};

/// Argmax of `ei` with the earliest index winning ties. If every entry is
/// zero, a seeded uniform pick among candidates with queried[i] == false (all
/// candidates if none are unqueried).
Proposal select_by_ei(const Vector& ei, const std::vector<bool>& queried, std::uint64_t seed);

/// Everything one BO step needs from the surrogate.
struct StepAnalysis {
    PosteriorSummary posterior;  // columns: candidates then unique observed points
    Incumbent incumbent;
    Proposal proposal;
};

StepAnalysis analyze_step(const Matrix& candidates, const Surrogate& s, std::size_t mc_samples,
                          std::uint64_t seed, std::size_t max_tries);

/// EI maximizer over the candidate rows, with best = incumbent posterior mean.
/// Candidates equal to an observed point stay eligible.
Proposal propose_next(const Matrix& candidates, const Surrogate& s, std::size_t mc_samples,
                      std::uint64_t seed, std::size_t max_tries = 20000);

}  // namespace shapebo
