#include "shapebo/gp.hpp"

#include "shapebo/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

namespace shapebo {

void Dataset::validate() const {
    if (points.rows() != values.size()) {
        throw ArgumentError("dataset has " + std::to_string(points.rows()) + " points but " +
                            std::to_string(values.size()) + " values");
    }
    if (!points.allFinite() || !values.allFinite()) {
        throw ArgumentError("dataset contains non-finite entries");
    }
}

JointGaussian JointGaussian::marginal(std::span<const Index> idx) const {
    JointGaussian out;
    const auto m = static_cast<Index>(idx.size());
    out.mean.resize(m);
    out.cov.resize(m, m);
    out.layout.reserve(idx.size());
    for (Index a = 0; a < m; ++a) {
        out.mean(a) = mean(idx[a]);
        out.layout.push_back(layout[static_cast<std::size_t>(idx[a])]);
        for (Index b = 0; b < m; ++b) {
            out.cov(a, b) = cov(idx[a], idx[b]);
        }
    }
    return out;
}

void PriorConfig::validate() const {
    if (!(mu_scale > 0.0) || !(tau2_scale > 0.0) || !(sigma2_scale > 0.0) || !(psi_scale > 0.0)) {
        throw ArgumentError("prior scales must be strictly positive");
    }
}

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

double log_cauchy(double x, double scale) {
    const double z = x / scale;
    return -std::log(std::numbers::pi * scale) - std::log1p(z * z);
}

double log_half_cauchy(double v, double scale) {
    if (!(v > 0.0)) {
        return -std::numeric_limits<double>::infinity();
    }
    const double z = v / scale;
    return std::log(2.0 / (std::numbers::pi * scale)) - std::log1p(z * z);
}

// Marginal likelihood with the per-dimension squared distances precomputed;
// the Metropolis chain calls this tens of thousands of times per fit.
class LoglikEvaluator {
public:
    explicit LoglikEvaluator(const Dataset& data) : y_(data.values) {
        const Index n = data.size();
        const Index d = data.dim();
        sqdist_.resize(static_cast<std::size_t>(d));
        for (Index k = 0; k < d; ++k) {
            Matrix& m = sqdist_[static_cast<std::size_t>(k)];
            m.resize(n, n);
            for (Index i = 0; i < n; ++i) {
                for (Index j = 0; j < n; ++j) {
                    const double r = data.points(i, k) - data.points(j, k);
                    m(i, j) = r * r;
                }
            }
        }
        work_.resize(n, n);
    }

    double operator()(const HyperParams& theta) {
        const Index n = y_.size();
        work_.setZero();
        for (std::size_t k = 0; k < sqdist_.size(); ++k) {
            work_.noalias() -= theta.lengthscale_prec_psi(static_cast<Index>(k)) * sqdist_[k];
        }
        work_ = theta.signal_var_tau2 * work_.array().exp();
        work_.diagonal().array() += theta.noise_var_sigma2;
        const JitteredCholesky chol(work_, theta.signal_var_tau2);
        const Vector resid = y_.array() - theta.mean_mu;
        const Vector alpha = chol.llt().matrixL().solve(resid);
        return -0.5 * alpha.squaredNorm() - 0.5 * chol.log_det() - 0.5 * static_cast<double>(n) * kLog2Pi;
    }

private:
    Vector y_;
    std::vector<Matrix> sqdist_;
    Matrix work_;
};

HyperParams from_state(const Vector& z, Index d) {
    HyperParams t;
    t.mean_mu = z(0);
    t.signal_var_tau2 = std::exp(z(1));
    t.noise_var_sigma2 = std::exp(z(2));
    t.lengthscale_prec_psi = z.tail(d).array().exp();
    return t;
}

double median_of(std::vector<double>& v) {
    const std::size_t n = v.size();
    const auto mid = v.begin() + static_cast<std::ptrdiff_t>(n / 2);
    std::nth_element(v.begin(), mid, v.end());
    if (n % 2 == 1) {
        return *mid;
    }
    const double upper = *mid;
    const double lower = *std::max_element(v.begin(), mid);
    return 0.5 * (lower + upper);
}

}  // namespace

double PriorConfig::log_density(const HyperParams& theta) const {
    double lp = log_cauchy(theta.mean_mu, mu_scale);
    lp += log_half_cauchy(theta.signal_var_tau2, tau2_scale);
    lp += log_half_cauchy(theta.noise_var_sigma2, sigma2_scale);
    for (Index j = 0; j < theta.dim(); ++j) {
        lp += log_half_cauchy(theta.lengthscale_prec_psi(j), psi_scale);
    }
    return lp;
}

JointGaussian prior_joint(std::vector<Coordinate> layout, const HyperParams& theta) {
    if (layout.empty()) {
        throw ArgumentError("prior_joint needs a nonempty layout");
    }
    theta.validate();
    JointGaussian g;
    g.cov = assemble_cov_matrix(layout, theta);
    g.mean.resize(static_cast<Index>(layout.size()));
    for (std::size_t i = 0; i < layout.size(); ++i) {
        g.mean(static_cast<Index>(i)) = layout[i].is_value() ? theta.mean_mu : 0.0;
    }
    g.layout = std::move(layout);
    return g;
}

double marginal_loglik(const HyperParams& theta, const Dataset& data) {
    theta.validate();
    data.validate();
    if (data.size() < 1) {
        throw ArgumentError("marginal_loglik needs at least one observation");
    }
    if (data.dim() != theta.dim()) {
        throw ArgumentError("dataset dimension does not match hyperparameters");
    }
    LoglikEvaluator eval(data);
    return eval(theta);
}

FitResult fit_hyperparams(const Dataset& data, const PriorConfig& priors, std::size_t chain_len,
                          std::size_t burn_in, std::uint64_t seed) {
    if (chain_len == 0) {
        throw ArgumentError("chain_len must be positive");
    }
    if (burn_in >= chain_len) {
        throw ArgumentError("burn_in must be smaller than chain_len");
    }
    data.validate();
    priors.validate();
    if (data.size() < 1) {
        throw ArgumentError("fit_hyperparams needs at least one observation");
    }

    const Index n = data.size();
    const Index d = data.dim();
    const Index dim = 3 + d;

    const double center = data.values.mean();
    double scale = 1.0;
    if (n >= 2) {
        const double var = (data.values.array() - center).square().sum() / static_cast<double>(n - 1);
        if (var > 1e-24) {
            scale = std::sqrt(var);
        }
    }
    Dataset standardized{data.points, (data.values.array() - center) / scale};
    LoglikEvaluator loglik(standardized);

    auto log_target = [&](const Vector& z) {
        const HyperParams t = from_state(z, d);
        double lp = priors.log_density(t);
        // Jacobian of the log transforms.
        lp += z(1) + z(2) + z.tail(d).sum();
        if (!std::isfinite(lp)) {
            return -std::numeric_limits<double>::infinity();
        }
        try {
            const double ll = loglik(t);
            return std::isfinite(ll) ? ll + lp : -std::numeric_limits<double>::infinity();
        } catch (const NumericalError&) {
            return -std::numeric_limits<double>::infinity();
        }
    };

    Vector z(dim);
    {
        std::vector<double> ys(standardized.values.data(), standardized.values.data() + n);
        // Standardized outputs have unit variance.
        z(0) = median_of(ys);
        z(1) = 0.0;
        z(2) = std::log(0.1);
        z.tail(d).setZero();
    }
    double current = log_target(z);
    if (!std::isfinite(current)) {
        throw NumericalError("hyperparameter chain initial state has non-finite density");
    }

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    Vector step = Vector::Constant(dim, 0.5);
    double log_lambda = std::log(2.38 / std::sqrt(static_cast<double>(dim)));
    constexpr std::size_t kBatch = 100;
    constexpr double kTargetAcceptance = 0.3;

    // Running moments of the burn-in chain for the per-coordinate scales.
    const std::size_t moment_start = burn_in / 4;
    Vector run_sum = Vector::Zero(dim);
    Vector run_sq = Vector::Zero(dim);
    std::size_t run_count = 0;

    std::vector<std::vector<double>> kept(static_cast<std::size_t>(dim));
    for (auto& k : kept) {
        k.reserve(chain_len - burn_in);
    }
    std::size_t batch_accepted = 0;
    std::size_t batch_no = 0;
    std::size_t post_accepted = 0;

    Vector proposal(dim);
    for (std::size_t it = 0; it < chain_len; ++it) {
        const double lambda = std::exp(log_lambda);
        for (Index i = 0; i < dim; ++i) {
            proposal(i) = z(i) + lambda * step(i) * normal(rng);
        }
        const double cand = log_target(proposal);
        const bool accept = std::log(unif(rng)) < cand - current;
        if (accept) {
            z = proposal;
            current = cand;
        }

        if (it < burn_in) {
            batch_accepted += accept ? 1 : 0;
            if (it >= moment_start) {
                run_sum += z;
                run_sq += z.cwiseProduct(z);
                ++run_count;
            }
            if ((it + 1) % kBatch == 0) {
                ++batch_no;
                const double rate = static_cast<double>(batch_accepted) / kBatch;
                const double gain = std::min(1.0, 10.0 / std::sqrt(static_cast<double>(batch_no)));
                log_lambda += gain * (rate - kTargetAcceptance);
                batch_accepted = 0;
                if (run_count >= 500 && (it + 1) % 500 == 0) {
                    const double c = static_cast<double>(run_count);
                    for (Index i = 0; i < dim; ++i) {
                        const double m = run_sum(i) / c;
                        const double v = std::max(run_sq(i) / c - m * m, 0.0);
                        step(i) = std::max(std::sqrt(v), 1e-3);
                    }
                }
            }
        } else {
            post_accepted += accept ? 1 : 0;
            for (Index i = 0; i < dim; ++i) {
                kept[static_cast<std::size_t>(i)].push_back(z(i));
            }
        }
    }

    const std::size_t draws = chain_len - burn_in;
    const double rate = static_cast<double>(post_accepted) / static_cast<double>(draws);
    if (post_accepted == 0) {
        std::ostringstream msg;
        msg << "hyperparameter chain rejected all " << draws << " post-burn-in proposals (acceptance rate "
            << rate << ")";
        throw SamplerError(msg.str(), rate);
    }

    Vector med(dim);
    for (Index i = 0; i < dim; ++i) {
        med(i) = median_of(kept[static_cast<std::size_t>(i)]);
    }
    FitResult out;
    out.params = from_state(med, d);
    out.params.mean_mu = center + scale * out.params.mean_mu;
    out.params.signal_var_tau2 *= scale * scale;
    out.params.noise_var_sigma2 *= scale * scale;
    out.acceptance_rate = rate;
    out.draws = draws;
    return out;
}

JointGaussian condition(const JointGaussian& prior, std::span<const Index> obs_idx, const Vector& y,
                        double sigma2) {
    if (!(sigma2 >= 0.0)) {
        throw ArgumentError("noise variance must be nonnegative");
    }
    if (static_cast<Index>(obs_idx.size()) != y.size()) {
        throw ArgumentError("observation index and value vectors differ in length");
    }
    const Index m = prior.size();
    std::vector<char> observed(static_cast<std::size_t>(m), 0);
    for (Index i : obs_idx) {
        if (i < 0 || i >= m) {
            throw ArgumentError("observation index out of range");
        }
        if (!prior.layout[static_cast<std::size_t>(i)].is_value()) {
            throw ArgumentError("observations must be function-value coordinates");
        }
        if (observed[static_cast<std::size_t>(i)]) {
            throw ArgumentError("duplicate observation index");
        }
        observed[static_cast<std::size_t>(i)] = 1;
    }
    std::vector<Index> rest;
    for (Index i = 0; i < m; ++i) {
        if (!observed[static_cast<std::size_t>(i)]) {
            rest.push_back(i);
        }
    }
    if (obs_idx.empty()) {
        return prior.marginal(rest);
    }

    const auto no = static_cast<Index>(obs_idx.size());
    const auto nr = static_cast<Index>(rest.size());
    Matrix k_oo(no, no);
    Matrix k_ro(nr, no);
    Vector resid(no);
    for (Index a = 0; a < no; ++a) {
        resid(a) = y(a) - prior.mean(obs_idx[a]);
        for (Index b = 0; b < no; ++b) {
            k_oo(a, b) = prior.cov(obs_idx[a], obs_idx[b]);
        }
        for (Index r = 0; r < nr; ++r) {
            k_ro(r, a) = prior.cov(rest[r], obs_idx[a]);
        }
    }
    const double scale = diagonal_scale(k_oo);
    k_oo.diagonal().array() += sigma2;
    const JitteredCholesky chol(k_oo, scale);

    JointGaussian post;
    post.layout.reserve(rest.size());
    Vector prior_mean(nr);
    Matrix prior_cov(nr, nr);
    for (Index r = 0; r < nr; ++r) {
        post.layout.push_back(prior.layout[static_cast<std::size_t>(rest[r])]);
        prior_mean(r) = prior.mean(rest[r]);
        for (Index s = 0; s < nr; ++s) {
            prior_cov(r, s) = prior.cov(rest[r], rest[s]);
        }
    }
    // W = L^{-1} K_or so that K_ro A^{-1} K_or = W^T W.
    const Matrix w = chol.llt().matrixL().solve(k_ro.transpose());
    const Vector alpha = chol.llt().matrixL().solve(resid);
    post.mean = prior_mean + w.transpose() * alpha;
    post.cov = prior_cov;
    post.cov.noalias() -= w.transpose() * w;
    post.cov = 0.5 * (post.cov + post.cov.transpose()).eval();
    return post;
}

}  // namespace shapebo
