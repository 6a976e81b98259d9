#pragma once

#include <random>

namespace shapebo::normal {

double pdf(double x);
double cdf(double x);
double quantile(double p);

/// log Phi(x), accurate far into the lower tail.
double log_cdf(double x);

/// log(Phi(b) - Phi(a)) for a < b, computed without cancellation in either tail.
double log_prob(double a, double b);

/// Standard normal truncated to [lower, upper] (infinite bounds allowed).
/// Rayleigh-proposal rejection in the tails, plain rejection on wide central
/// intervals, inverse transform on narrow ones.
double sample_truncated(double lower, double upper, std::mt19937_64& rng);

/// E[Z | lower <= Z <= upper] for standard normal Z.
double truncated_mean(double lower, double upper);

}  // namespace shapebo::normal
