#include "shapebo/gp.hpp"
#include "shapebo/linalg.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

using namespace shapebo;

namespace {

HyperParams params(double mu, double tau2, double sigma2, std::vector<double> psi) {
    HyperParams t;
    t.mean_mu = mu;
    t.signal_var_tau2 = tau2;
    t.noise_var_sigma2 = sigma2;
    t.lengthscale_prec_psi = Eigen::Map<Vector>(psi.data(), static_cast<Index>(psi.size()));
    return t;
}

Vector vec(std::initializer_list<double> v) { return Eigen::Map<const Vector>(v.begin(), static_cast<Index>(v.size())); }

// Draw of f + noise from a GP at uniform points in [0, 1].
Dataset simulate_gp(const HyperParams& t, Index n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> z(0.0, 1.0);
    Dataset data;
    data.points.resize(n, t.dim());
    for (Index i = 0; i < n; ++i)
        for (Index k = 0; k < t.dim(); ++k) data.points(i, k) = u(rng);
    std::vector<Coordinate> layout;
    for (Index i = 0; i < n; ++i) layout.push_back(Coordinate::value(data.points.row(i).transpose()));
    Matrix k = assemble_cov_matrix(layout, t);
    k.diagonal().array() += t.noise_var_sigma2 + 1e-10;
    const Matrix l = Eigen::LLT<Matrix>(k).matrixL();
    Vector e(n);
    for (Index i = 0; i < n; ++i) e(i) = z(rng);
    data.values = Vector::Constant(n, t.mean_mu) + l * e;
    return data;
}

}  // namespace

TEST_CASE("prior_joint examples") {
    const auto t = params(0.7, 1.4, 0.0, {2.0});
    const Vector p = vec({0.3});
    const JointGaussian a = prior_joint({Coordinate::value(p)}, t);
    CHECK(a.mean(0) == 0.7);
    CHECK(a.cov(0, 0) == doctest::Approx(1.4));

    const JointGaussian b = prior_joint({Coordinate::value(p), Coordinate::derivative(p, 0, 1)}, t);
    CHECK(b.mean(0) == 0.7);
    CHECK(b.mean(1) == 0.0);
    CHECK(b.cov(0, 1) == 0.0);
    CHECK(b.cov(1, 1) == doctest::Approx(2 * 2.0 * 1.4));

    const auto t2 = params(-3.0, 1.0, 0.0, {1.0, 4.0});
    const JointGaussian c = prior_joint({Coordinate::derivative(vec({0.1, 0.2}), 1, 2), Coordinate::value(vec({0.5, 0.5})),
                                         Coordinate::derivative(vec({0.9, 0.2}), 0, 1)},
                                        t2);
    CHECK(c.mean(0) == 0.0);
    CHECK(c.mean(1) == -3.0);
    CHECK(c.mean(2) == 0.0);
    CHECK_THROWS_AS(prior_joint({}, t2), ArgumentError);
}

TEST_CASE("marginal_loglik of one observation at the mean") {
    const auto t = params(0.4, 1.3, 0.2, {1.0});
    const Dataset data{Matrix::Constant(1, 1, 0.5), vec({0.4})};
    const double expected = -0.5 * std::log(2.0 * std::numbers::pi * (1.3 + 0.2));
    CHECK(marginal_loglik(t, data) == doctest::Approx(expected).epsilon(1e-8));
}

TEST_CASE("marginal_loglik matches an explicit 2x2 density") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int rep = 0; rep < 20; ++rep) {
        const double tau2 = 0.5 + u(rng);
        const double sigma2 = 0.05 + 0.3 * u(rng);
        const double psi = 0.5 + 5 * u(rng);
        const double mu = u(rng) - 0.5;
        const auto t = params(mu, tau2, sigma2, {psi});
        const double x1 = u(rng), x2 = u(rng);
        const double y1 = mu + u(rng) - 0.5, y2 = mu + u(rng) - 0.5;
        const Dataset data{(Matrix(2, 1) << x1, x2).finished(), vec({y1, y2})};

        // The model covariance carries the 1e-8 tau2 diagonal jitter.
        const double a = tau2 + sigma2 + 1e-8 * tau2;
        const double b = tau2 * std::exp(-psi * (x1 - x2) * (x1 - x2));
        const double det = a * a - b * b;
        const double r1 = y1 - mu, r2 = y2 - mu;
        const double quad = (a * r1 * r1 - 2 * b * r1 * r2 + a * r2 * r2) / det;
        const double expected = -0.5 * quad - 0.5 * std::log(det) - std::log(2.0 * std::numbers::pi);
        CHECK(std::abs(marginal_loglik(t, data) - expected) <= 1e-10);
    }
}

TEST_CASE("marginal_loglik is invariant under joint permutation") {
    const auto t = params(0.1, 1.0, 0.05, {3.0, 0.7});
    const Dataset data = simulate_gp(t, 12, 8);
    Dataset perm = data;
    std::vector<Index> order(12);
    for (Index i = 0; i < 12; ++i) order[static_cast<std::size_t>(i)] = (i * 5) % 12;
    for (Index i = 0; i < 12; ++i) {
        perm.points.row(i) = data.points.row(order[static_cast<std::size_t>(i)]);
        perm.values(i) = data.values(order[static_cast<std::size_t>(i)]);
    }
    CHECK(marginal_loglik(t, perm) == doctest::Approx(marginal_loglik(t, data)).epsilon(1e-12));
}

TEST_CASE("marginal_loglik is smooth in theta") {
    const auto t = params(0.1, 1.0, 0.05, {3.0});
    const Dataset data = simulate_gp(t, 10, 4);
    for (double h : {1e-3, 1e-4, 1e-5}) {
        auto t_up = t;
        auto t_dn = t;
        t_up.lengthscale_prec_psi(0) += h;
        t_dn.lengthscale_prec_psi(0) -= h;
        const double jump = std::abs(marginal_loglik(t_up, data) - marginal_loglik(t_dn, data));
        CHECK(jump <= 100.0 * h);
    }
}

TEST_CASE("fit_hyperparams is deterministic given the seed") {
    const auto t = params(0.0, 1.0, 0.01, {5.0});
    const Dataset data = simulate_gp(t, 10, 1);
    const FitResult a = fit_hyperparams(data, PriorConfig{}, 3000, 1000, 42);
    const FitResult b = fit_hyperparams(data, PriorConfig{}, 3000, 1000, 42);
    CHECK(a.params.mean_mu == b.params.mean_mu);
    CHECK(a.params.signal_var_tau2 == b.params.signal_var_tau2);
    CHECK(a.params.noise_var_sigma2 == b.params.noise_var_sigma2);
    CHECK(a.params.lengthscale_prec_psi == b.params.lengthscale_prec_psi);
    CHECK(a.acceptance_rate == b.acceptance_rate);
    CHECK(a.draws == 2000);
}

TEST_CASE("fit_hyperparams argument errors") {
    const Dataset data{Matrix::Constant(1, 1, 0.5), vec({1.0})};
    CHECK_THROWS_AS(fit_hyperparams(data, PriorConfig{}, 0, 0, 1), ArgumentError);
    CHECK_THROWS_AS(fit_hyperparams(data, PriorConfig{}, 100, 100, 1), ArgumentError);
    const Dataset empty{Matrix(0, 1), Vector(0)};
    CHECK_THROWS_AS(fit_hyperparams(empty, PriorConfig{}, 100, 10, 1), ArgumentError);
    PriorConfig bad;
    bad.psi_scale = 0.0;
    CHECK_THROWS_AS(fit_hyperparams(data, bad, 100, 10, 1), ArgumentError);
}

TEST_CASE("a stalled chain reports its acceptance rate") {
    // One post-burn-in proposal: some seed rejects it.
    const Dataset data{Matrix::Constant(1, 1, 0.5), vec({1.0})};
    bool thrown = false;
    for (std::uint64_t seed = 0; seed < 40 && !thrown; ++seed) {
        try {
            fit_hyperparams(data, PriorConfig{}, 2, 1, seed);
        } catch (const SamplerError& e) {
            thrown = true;
            CHECK(e.acceptance_rate() == 0.0);
        }
    }
    CHECK(thrown);
}

TEST_CASE("single observation leaves sigma2 near its prior median") {
    const Dataset data{Matrix::Constant(1, 1, 0.5), vec({2.0})};
    const FitResult r = fit_hyperparams(data, PriorConfig{}, 20000, 5000, 9);
    CHECK(r.params.noise_var_sigma2 >= 0.1);
    CHECK(r.params.noise_var_sigma2 <= 0.6);
}

TEST_CASE("lengthscale precision is recovered from simulated data") {
    const auto truth = params(0.0, 1.0, 0.01, {5.0});
    int good = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const Dataset data = simulate_gp(truth, 30, 100 + seed);
        const FitResult r = fit_hyperparams(data, PriorConfig{}, 20000, 5000, seed);
        const double psi = r.params.lengthscale_prec_psi(0);
        good += (psi >= 5.0 / 3.0 && psi <= 15.0) ? 1 : 0;
    }
    CHECK(good >= 8);
}

TEST_CASE("adapted acceptance rate lands in the target band") {
    const auto t1 = params(0.0, 1.0, 0.01, {5.0});
    const auto t2 = params(0.0, 1.0, 0.05, {2.0, 8.0});
    for (const Dataset& data : {simulate_gp(t1, 20, 5), simulate_gp(t2, 25, 6)}) {
        const FitResult r = fit_hyperparams(data, PriorConfig{}, 20000, 5000, 3);
        CHECK(r.acceptance_rate >= 0.1);
        CHECK(r.acceptance_rate <= 0.6);
    }
}

TEST_CASE("noiseless conditioning interpolates") {
    const auto t = params(0.2, 1.5, 0.0, {3.0});
    const Vector p = vec({0.4});
    const JointGaussian prior = prior_joint({Coordinate::value(p), Coordinate::value(p), Coordinate::value(vec({0.9}))}, t);
    const std::vector<Index> obs{0};
    const JointGaussian post = condition(prior, obs, vec({1.3}), 0.0);
    CHECK(post.mean(0) == doctest::Approx(1.3).epsilon(1e-7));
    CHECK(post.cov(0, 0) <= 1e-8 * 1.5 + 1e-15);
}

TEST_CASE("far prediction points keep their prior law") {
    const auto t = params(0.2, 1.5, 0.1, {3.0});
    const JointGaussian prior =
        prior_joint({Coordinate::value(vec({0.0})), Coordinate::value(vec({100.0})), Coordinate::derivative(vec({100.0}), 0, 1)}, t);
    const std::vector<Index> obs{0};
    const JointGaussian post = condition(prior, obs, vec({5.0}), 0.1);
    CHECK(std::abs(post.mean(0) - 0.2) <= 1e-6);
    CHECK(std::abs(post.mean(1)) <= 1e-6);
    CHECK(std::abs(post.cov(0, 0) - 1.5) <= 1e-6);
    CHECK(std::abs(post.cov(1, 1) - 6.0 * 1.5) <= 1e-6);
}

TEST_CASE("scalar conjugate update at the observed point") {
    const double mu = 0.3, tau2 = 2.0, sigma2 = 0.5, y = 1.7;
    const auto t = params(mu, tau2, sigma2, {1.0});
    const Vector p = vec({0.25});
    const JointGaussian prior = prior_joint({Coordinate::value(p), Coordinate::value(p)}, t);
    const std::vector<Index> obs{0};
    const JointGaussian post = condition(prior, obs, vec({y}), sigma2);
    CHECK(post.mean(0) == doctest::Approx(mu + tau2 / (tau2 + sigma2) * (y - mu)).epsilon(1e-7));
    CHECK(post.cov(0, 0) == doctest::Approx(tau2 * sigma2 / (tau2 + sigma2)).epsilon(1e-6));
}

TEST_CASE("conditioning never increases marginal variance") {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int rep = 0; rep < 30; ++rep) {
        const int d = 1 + rep % 2;
        std::vector<double> psi(static_cast<std::size_t>(d));
        for (auto& p : psi) p = 0.5 + 10 * u(rng);
        const auto t = params(0.0, 0.5 + u(rng), 0.2 * u(rng), psi);
        std::vector<Coordinate> layout;
        const int n = 2 + rep % 5;
        for (int i = 0; i < n; ++i) {
            Vector x(d);
            for (auto k = 0; k < d; ++k) x(k) = u(rng);
            layout.push_back(Coordinate::value(x));
        }
        for (int i = 0; i < 6; ++i) {
            Vector x(d);
            for (auto k = 0; k < d; ++k) x(k) = u(rng);
            layout.push_back(Coordinate::derivative(x, i % d, 1 + i % 2));
            layout.push_back(Coordinate::value(x));
        }
        const JointGaussian prior = prior_joint(layout, t);
        std::vector<Index> obs(static_cast<std::size_t>(n));
        Vector y(n);
        for (int i = 0; i < n; ++i) {
            obs[static_cast<std::size_t>(i)] = i;
            y(i) = u(rng);
        }
        const JointGaussian post = condition(prior, obs, y, t.noise_var_sigma2);
        for (Index i = 0; i < post.size(); ++i) {
            CHECK(post.cov(i, i) <= prior.cov(n + i, n + i) + 1e-10);
        }
        CHECK(post.cov == post.cov.transpose());
    }
}

TEST_CASE("conditioning on nothing returns the prior") {
    const auto t = params(0.5, 1.0, 0.1, {2.0, 3.0});
    const JointGaussian prior =
        prior_joint({Coordinate::value(vec({0.1, 0.2})), Coordinate::derivative(vec({0.5, 0.6}), 1, 2)}, t);
    const JointGaussian post = condition(prior, std::vector<Index>{}, Vector(0), 0.1);
    CHECK((post.mean - prior.mean).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((post.cov - prior.cov).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("condition rejects malformed observation sets") {
    const auto t = params(0.5, 1.0, 0.1, {2.0});
    const JointGaussian prior =
        prior_joint({Coordinate::value(vec({0.1})), Coordinate::derivative(vec({0.5}), 0, 1)}, t);
    CHECK_THROWS_AS(condition(prior, std::vector<Index>{1}, vec({1.0}), 0.1), ArgumentError);
    CHECK_THROWS_AS(condition(prior, std::vector<Index>{0, 0}, vec({1.0, 1.0}), 0.1), ArgumentError);
    CHECK_THROWS_AS(condition(prior, std::vector<Index>{0}, vec({1.0}), -1.0), ArgumentError);
    CHECK_THROWS_AS(condition(prior, std::vector<Index>{5}, vec({1.0}), 0.1), ArgumentError);
}
