#include "shapebo/normal.hpp"

#include <boost/math/special_functions/erf.hpp>

#include <cmath>
#include <limits>
#include <numbers>

namespace shapebo::normal {

namespace {
constexpr double kInvSqrt2Pi = 0.39894228040143267793994605993438;
constexpr double kHalfLog2Pi = 0.91893853320467274178032973640562;
constexpr double kInf = std::numeric_limits<double>::infinity();

double log_pdf(double x) { return -0.5 * x * x - kHalfLog2Pi; }

// Rejection from a shifted Rayleigh proposal for l > 0.
double sample_tail(double l, double u, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double c = 0.5 * l * l;
    const double f = std::expm1(c - 0.5 * u * u);
    for (;;) {
        const double x = c - std::log1p(unif(rng) * f);
        const double v = unif(rng);
        if (v * v * x <= c) {
            return std::sqrt(2.0 * x);
        }
    }
}
}  // namespace

double pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

double cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double quantile(double p) {
    if (p <= 0.0) {
        return -kInf;
    }
    if (p >= 1.0) {
        return kInf;
    }
    return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

double log_cdf(double x) {
    if (x == -kInf) {
        return -kInf;
    }
    if (x > 5.0) {
        return std::log1p(-0.5 * std::erfc(x / std::numbers::sqrt2));
    }
    if (x > -30.0) {
        return std::log(0.5 * std::erfc(-x / std::numbers::sqrt2));
    }
    // Mills-ratio asymptotic series.
    const double z = 1.0 / (x * x);
    const double series = 1.0 - z * (1.0 - 3.0 * z * (1.0 - 5.0 * z * (1.0 - 7.0 * z)));
    return -0.5 * x * x - std::log(-x) - kHalfLog2Pi + std::log(series);
}

double log_prob(double a, double b) {
    if (!(a < b)) {
        return -kInf;
    }
    if (a > 0.0) {
        const double pa = log_cdf(-a);
        const double pb = log_cdf(-b);
        return pa + std::log1p(-std::exp(pb - pa));
    }
    if (b < 0.0) {
        const double pa = log_cdf(a);
        const double pb = log_cdf(b);
        return pb + std::log1p(-std::exp(pa - pb));
    }
    return std::log1p(-cdf(a) - cdf(-b));
}

double sample_truncated(double lower, double upper, std::mt19937_64& rng) {
    constexpr double kTailStart = 0.66;
    constexpr double kWide = 2.0;
    if (lower > kTailStart) {
        return sample_tail(lower, upper, rng);
    }
    if (upper < -kTailStart) {
        return -sample_tail(-upper, -lower, rng);
    }
    if (upper - lower > kWide) {
        std::normal_distribution<double> n01(0.0, 1.0);
        for (;;) {
            const double z = n01(rng);
            if (z >= lower && z <= upper) {
                return z;
            }
        }
    }
    // Both bounds lie within a few units of zero here, so the CDF difference is
    // well conditioned.
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double pl = cdf(lower);
    const double pu = cdf(upper);
    double z = quantile(pl + (pu - pl) * unif(rng));
    if (z < lower) z = lower;
    if (z > upper) z = upper;
    return z;
}

double truncated_mean(double lower, double upper) {
    const double lp = log_prob(lower, upper);
    const double a = std::isfinite(lower) ? std::exp(log_pdf(lower) - lp) : 0.0;
    const double b = std::isfinite(upper) ? std::exp(log_pdf(upper) - lp) : 0.0;
    return a - b;
}

}  // namespace shapebo::normal
