#include "selftest.hpp"

#include "shapebo/acquisition.hpp"
#include "shapebo/benchmarks.hpp"
#include "shapebo/constraints.hpp"
#include "shapebo/design.hpp"
#include "shapebo/kernel.hpp"
#include "shapebo/tmvn.hpp"

#include <Eigen/Cholesky>

#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <ostream>
#include <random>
#include <vector>

namespace shapebo {

namespace {

struct Check {
    const char* name;
    std::function<bool()> run;
};

bool kernel_first_derivatives() {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::uniform_real_distribution<double> pos(0.2, 3.0);
    for (int rep = 0; rep < 100; ++rep) {
        const Index d = 1 + rep % 3;
        HyperParams t;
        t.signal_var_tau2 = pos(rng);
        t.lengthscale_prec_psi.resize(d);
        Vector x(d), y(d);
        for (Index i = 0; i < d; ++i) {
            t.lengthscale_prec_psi(i) = pos(rng);
            x(i) = u(rng);
            y(i) = u(rng);
        }
        const int j = static_cast<int>(rep % d);
        const int k = static_cast<int>((rep / 3) % d);
        const double h = 1e-5;
        auto shifted = [&](Vector v, int dim, double s) {
            v(dim) += s;
            return v;
        };
        const double fd_left = (se_cov(shifted(x, j, h), y, t) - se_cov(shifted(x, j, -h), y, t)) / (2 * h);
        const double fd_mixed = (se_cov_deriv(shifted(x, j, h), y, std::nullopt, Partial{k, 1}, t) -
                                 se_cov_deriv(shifted(x, j, -h), y, std::nullopt, Partial{k, 1}, t)) /
                                (2 * h);
        const double a = se_cov_deriv(x, y, Partial{j, 1}, std::nullopt, t);
        const double b = se_cov_deriv(x, y, Partial{j, 1}, Partial{k, 1}, t);
        const double scale = t.signal_var_tau2 * std::max(1.0, t.lengthscale_prec_psi.maxCoeff());
        if (std::abs(a - fd_left) > 1e-5 * scale || std::abs(b - fd_mixed) > 1e-5 * scale) return false;
    }
    return true;
}

bool derivative_covariance_is_pd() {
    HyperParams t;
    t.lengthscale_prec_psi = Vector::Constant(2, 4.0);
    const Matrix grid = maximin_lhs(15, 2, 3).points;
    std::vector<Coordinate> layout;
    for (Index i = 0; i < grid.rows(); ++i) {
        layout.push_back(Coordinate::value(grid.row(i).transpose()));
        layout.push_back(Coordinate::derivative(grid.row(i).transpose(), 0, 1));
        layout.push_back(Coordinate::derivative(grid.row(i).transpose(), 1, 2));
    }
    Matrix k = assemble_cov_matrix(layout, t);
    if ((k - k.transpose()).cwiseAbs().maxCoeff() > 1e-12) return false;
    k.diagonal().array() += 1e-8;
    return Eigen::LLT<Matrix>(k).info() == Eigen::Success;
}

bool pattern_oracle() {
    for (int k = 0; k <= 8; ++k) {
        int total = 1;
        for (int i = 0; i < k; ++i) total *= 3;
        std::vector<double> coords(static_cast<std::size_t>(k)), v(static_cast<std::size_t>(k));
        for (int i = 0; i < k; ++i) coords[static_cast<std::size_t>(i)] = i;
        for (int code = 0; code < total; ++code) {
            int c = code;
            for (int i = 0; i < k; ++i, c /= 3) v[static_cast<std::size_t>(i)] = c % 3 - 1;
            bool split_ok = false;
            for (int s = 0; s <= k && !split_ok; ++s) {
                bool ok = true;
                for (int i = 0; i < k; ++i) ok = ok && (i < s ? v[static_cast<std::size_t>(i)] <= 0 : v[static_cast<std::size_t>(i)] >= 0);
                split_ok = ok;
            }
            if (quasiconvex_pattern_ok(coords, v) != split_ok) return false;
        }
    }
    return true;
}

bool half_normal_mean() {
    const TmvnResult r = sample_tmvn(Vector::Zero(1), Matrix::Identity(1, 1), Vector::Zero(1),
                                     Vector::Constant(1, std::numeric_limits<double>::infinity()), 100000, 11);
    return std::abs(r.draws.mean() - std::sqrt(2.0 / 3.141592653589793)) <= 0.01;
}

bool expected_improvement_properties() {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int i = 0; i < 2000; ++i) {
        const double mu = u(rng), best = u(rng), sd = std::abs(u(rng)), step = 0.1 * std::abs(u(rng));
        const double e = ei_closed(mu, sd, best);
        if (e < std::max(best - mu, 0.0) - 1e-12) return false;
        if (ei_closed(mu + step, sd, best) > e + 1e-12) return false;
        if (ei_closed(mu, sd, best + step) < e - 1e-12) return false;
    }
    return std::abs(ei_closed(0.0, 1.0, 0.0) - 0.3989422804014327) < 1e-12;
}

bool mixture_posterior_and_median() {
    const BetaMixture post = posterior_mixture(BetaMixture::sample_size_prior(), 1, 1);
    if (std::abs(post.weights(0) - 0.6) > 1e-10 || std::abs(post.weights(1) - 0.4) > 1e-10) return false;
    const BetaMixture b31{Vector::Ones(1), Vector::Constant(1, 3.0), Vector::Constant(1, 1.0)};
    if (std::abs(mixture_median(b31) - std::cbrt(0.5)) > 1e-9) return false;
    for (long n = 0; n <= 20; ++n) {
        for (long y = 0; y <= n; ++y) {
            const BetaMixture m = posterior_mixture(BetaMixture::sample_size_prior(), y, n);
            if (std::abs(mixture_cdf(m, mixture_median(m)) - 0.5) > 1e-9) return false;
        }
    }
    return true;
}

bool latin_hypercube_bins() {
    const Index n = 40;
    const Matrix x = maximin_lhs(n, 3, 5).points;
    for (Index j = 0; j < 3; ++j) {
        std::vector<int> hits(static_cast<std::size_t>(n), 0);
        for (Index i = 0; i < n; ++i) ++hits[static_cast<std::size_t>(std::floor(x(i, j) * static_cast<double>(n)))];
        for (int h : hits)
            if (h != 1) return false;
    }
    return true;
}

}  // namespace

int run_selftest(std::ostream& out) {
    const std::vector<Check> checks{
        {"kernel first derivatives vs finite differences", kernel_first_derivatives},
        {"derivative covariance symmetric positive definite", derivative_covariance_is_pd},
        {"quasiconvex pattern vs split definition (3^k, k <= 8)", pattern_oracle},
        {"truncated normal half-normal mean", half_normal_mean},
        {"expected improvement bounds and monotonicity", expected_improvement_properties},
        {"beta mixture posterior and median", mixture_posterior_and_median},
        {"latin hypercube bin occupancy", latin_hypercube_bins},
    };
    int failed = 0;
    for (const Check& c : checks) {
        const auto start = std::chrono::steady_clock::now();
        bool ok = false;
        std::string err;
        try {
            ok = c.run();
        } catch (const std::exception& e) {
            err = e.what();
        }
        const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
        out << (ok ? "PASS " : "FAIL ") << c.name << " (" << static_cast<long>(ms) << " ms)";
        if (!err.empty()) out << ": " << err;
        out << '\n';
        failed += ok ? 0 : 1;
    }
    out << (failed == 0 ? "selftest passed\n" : std::to_string(failed) + " selftest check(s) failed\n");
    return failed == 0 ? 0 : 2;
}

}  // namespace shapebo
