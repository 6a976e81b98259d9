#include "shapebo/benchmarks.hpp"

#include <boost/math/special_functions/beta.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace shapebo {

void BetaMixture::validate() const {
    if (weights.size() == 0 || alphas.size() != weights.size() || betas.size() != weights.size()) {
        throw ArgumentError("beta mixture needs equally many weights, alphas and betas");
    }
    if ((weights.array() < 0.0).any() || std::abs(weights.sum() - 1.0) > 1e-12) {
        throw ArgumentError("beta mixture weights must be nonnegative and sum to 1");
    }
    if (!((alphas.array() > 0.0).all() && (betas.array() > 0.0).all())) {
        throw ArgumentError("beta mixture shape parameters must be positive");
    }
}

BetaMixture BetaMixture::sample_size_prior() {
    BetaMixture m;
    m.weights = Vector::Constant(2, 0.5);
    m.alphas = (Vector(2) << 3.0, 3.0).finished();
    m.betas = (Vector(2) << 1.0, 3.0).finished();
    return m;
}

namespace {
double log_beta(double a, double b) { return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b); }
}  // namespace

BetaMixture posterior_mixture(const BetaMixture& prior, long y, long n) {
    prior.validate();
    if (y < 0 || n < 0 || y > n) {
        throw ArgumentError("posterior_mixture needs 0 <= y <= n");
    }
    const auto k = prior.size();
    BetaMixture post;
    post.alphas = prior.alphas.array() + static_cast<double>(y);
    post.betas = prior.betas.array() + static_cast<double>(n - y);
    Vector logw(k);
    for (Index i = 0; i < k; ++i) {
        logw(i) = prior.weights(i) > 0.0
                      ? std::log(prior.weights(i)) + log_beta(post.alphas(i), post.betas(i)) -
                            log_beta(prior.alphas(i), prior.betas(i))
                      : -std::numeric_limits<double>::infinity();
    }
    const double m = logw.maxCoeff();
    post.weights = (logw.array() - m).exp();
    post.weights /= post.weights.sum();
    return post;
}

double mixture_cdf(const BetaMixture& mix, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    double c = 0.0;
    for (Index i = 0; i < mix.size(); ++i) {
        if (mix.weights(i) > 0.0) {
            c += mix.weights(i) * boost::math::ibeta(mix.alphas(i), mix.betas(i), x);
        }
    }
    return c;
}

double mixture_median(const BetaMixture& mix) {
    mix.validate();
    double lo = 0.0;
    double hi = 1.0;
    // Narrower than the nominal 1e-10 so that |CDF - 1/2| stays below 1e-9
    // even for sharply peaked posteriors.
    while (hi - lo > 1e-12) {
        const double mid = 0.5 * (lo + hi);
        if (mixture_cdf(mix, mid) < 0.5) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

double binomial_loss_objective(long n, std::size_t n_sims, const LossSpec& spec, const BetaMixture& prior,
                               std::uint64_t seed) {
    if (n < 1) {
        throw ArgumentError("binomial_loss_objective needs n >= 1");
    }
    if (n_sims < 1) {
        throw ArgumentError("binomial_loss_objective needs n_sims >= 1");
    }
    if (spec.sampling_cost < 0.0) {
        throw ArgumentError("sampling cost must be nonnegative");
    }
    prior.validate();

    std::vector<double> median_cache(static_cast<std::size_t>(n + 1), std::numeric_limits<double>::quiet_NaN());
    std::discrete_distribution<int> component(prior.weights.data(), prior.weights.data() + prior.size());
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    double total = 0.0;
    for (std::size_t s = 0; s < n_sims; ++s) {
        std::mt19937_64 rng(derive_seed(seed, 0xb1, s));
        const int k = component(rng);
        std::gamma_distribution<double> ga(prior.alphas(k), 1.0);
        std::gamma_distribution<double> gb(prior.betas(k), 1.0);
        const double a = ga(rng);
        const double b = gb(rng);
        const double theta = a / (a + b);
        long y = 0;
        for (long t = 0; t < n; ++t) {
            y += unif(rng) < theta ? 1 : 0;
        }
        double& m = median_cache[static_cast<std::size_t>(y)];
        if (std::isnan(m)) {
            m = mixture_median(posterior_mixture(prior, y, n));
        }
        total += std::abs(theta - m);
    }
    return total / static_cast<double>(n_sims) + spec.sampling_cost * static_cast<double>(n);
}

double synthetic_quasiconvex_2d(const Vector& x, double noise_sd, std::uint64_t seed) {
    if (x.size() != 2) {
        throw ArgumentError("synthetic_quasiconvex_2d takes a 2-vector");
    }
    if (noise_sd < 0.0) {
        throw ArgumentError("noise_sd must be nonnegative");
    }
    const double a = x(0) - 1.5;
    const double b = x(1) + 2.0;
    double f = 0.7 * std::log1p(a * a) + 0.5 * std::log1p(b * b) + 0.1;
    if (noise_sd > 0.0) {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> n01(0.0, 1.0);
        f += noise_sd * n01(rng);
    }
    return f;
}

namespace {
Box make_box(std::initializer_list<double> lo, std::initializer_list<double> hi) {
    Box b;
    b.lower = Eigen::Map<const Vector>(lo.begin(), static_cast<Index>(lo.size()));
    b.upper = Eigen::Map<const Vector>(hi.begin(), static_cast<Index>(hi.size()));
    return b;
}

Vector vec(std::initializer_list<double> v) {
    return Eigen::Map<const Vector>(v.begin(), static_cast<Index>(v.size()));
}
}  // namespace

std::vector<TestFunction> test_functions(const ObjectiveParams& params) {
    std::vector<TestFunction> out;

    const std::size_t n_sims = params.n_sims;
    out.push_back({"binomial", make_box({1.0}, {120.0}), {Shape::Convex}, std::nullopt, true,
                   [n_sims](const Vector& x, std::uint64_t seed) {
                       return binomial_loss_objective(std::lround(x(0)), n_sims, LossSpec{},
                                                      BetaMixture::sample_size_prior(), seed);
                   }});

    const double noise = params.noise_sd;
    out.push_back({"synthetic-qc-2d", make_box({-10.0, -10.0}, {10.0, 10.0}),
                   {Shape::Quasiconvex, Shape::Quasiconvex}, vec({1.5, -2.0}), false,
                   [noise](const Vector& x, std::uint64_t seed) { return synthetic_quasiconvex_2d(x, noise, seed); }});

    out.push_back({"quad-1d", make_box({0.0}, {1.0}), {Shape::Convex}, vec({0.3}), false,
                   [](const Vector& x, std::uint64_t) { return (x(0) - 0.3) * (x(0) - 0.3); }});

    out.push_back({"logistic-1d", make_box({0.0}, {1.0}), {Shape::MonotoneIncreasing}, vec({0.0}), false,
                   [](const Vector& x, std::uint64_t) { return 1.0 / (1.0 + std::exp(-10.0 * (x(0) - 0.5))); }});

    out.push_back({"vee-1d", make_box({0.0}, {1.0}), {Shape::Quasiconvex}, vec({0.7}), false,
                   [](const Vector& x, std::uint64_t) { return std::abs(x(0) - 0.7); }});
    return out;
}

TestFunction lookup_objective(std::string_view name, const ObjectiveParams& params) {
    for (auto& f : test_functions(params)) {
        if (f.name == name) {
            return f;
        }
    }
    throw ArgumentError("unknown objective '" + std::string(name) + "'");
}

}  // namespace shapebo
