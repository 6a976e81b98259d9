#pragma once

#include "shapebo/bo_loop.hpp"
#include "shapebo/constraints.hpp"
#include "shapebo/types.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace shapebo {

/// Finite mixture of Beta distributions on a success probability.
struct BetaMixture {
    Vector weights;
    Vector alphas;
    Vector betas;

    Index size() const { return weights.size(); }
    void validate() const;

    /// Equal-weight mixture of Beta(3,1) and Beta(3,3).
    static BetaMixture sample_size_prior();
};

/// Loss |theta - m_y| + sampling_cost * n, m_y the posterior median.
struct LossSpec {
    double sampling_cost = 0.0008;
};

/// Conjugate update after y successes in n trials. Weights are reweighted by
/// each component's marginal likelihood B(a+y, b+n-y) / B(a, b), in log space.
BetaMixture posterior_mixture(const BetaMixture& prior, long y, long n);

double mixture_cdf(const BetaMixture& mix, double x);

/// Root of mixture_cdf(x) = 0.5 by bisection on [0, 1].
double mixture_median(const BetaMixture& mix);

/// Monte-Carlo expected loss of a binomial experiment with n trials. Each
/// simulation draws a mixture component, theta from it, then y as the number
/// of the first n uniforms of its own sub-stream below theta, so estimates for
/// different n under one seed use common random numbers.
double binomial_loss_objective(long n, std::size_t n_sims, const LossSpec& spec, const BetaMixture& prior,
                               std::uint64_t seed);

/// 0.7 log(1 + (x1 - 1.5)^2) + 0.5 log(1 + (x2 + 2)^2) + 0.1 + N(0, noise_sd^2).
/// Componentwise quasiconvex with its minimum 0.1 at (1.5, -2).
double synthetic_quasiconvex_2d(const Vector& x, double noise_sd, std::uint64_t seed);

/// Knobs of the stochastic objectives.
struct ObjectiveParams {
    double noise_sd = 0.05;
    std::size_t n_sims = 100;
};

struct TestFunction {
    std::string name;
    Box box;
    /// Shape class the objective belongs to, one entry per dimension.
    std::vector<Shape> shape;
    std::optional<Vector> optimum;
    bool integer_domain = false;
    Objective objective;
};

/// Registry: "binomial", "synthetic-qc-2d", "quad-1d", "logistic-1d", "vee-1d".
std::vector<TestFunction> test_functions(const ObjectiveParams& params = {});

/// Throws ArgumentError for unknown names.
TestFunction lookup_objective(std::string_view name, const ObjectiveParams& params = {});

}  // namespace shapebo
