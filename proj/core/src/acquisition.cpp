#include "shapebo/acquisition.hpp"

#include "shapebo/normal.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace shapebo {

double ei_closed(double mu, double sd, double best) {
    if (sd < 0.0) {
        throw ArgumentError("ei_closed needs sd >= 0");
    }
    const double gap = best - mu;
    if (sd == 0.0) {
        return std::max(gap, 0.0);
    }
    const double z = gap / sd;
    const double v = gap * normal::cdf(z) + sd * normal::pdf(z);
    return std::max(v, 0.0);
}

double ei_mc(std::span<const double> samples, double best) {
    if (samples.empty()) {
        throw ArgumentError("ei_mc needs at least one sample");
    }
    double s = 0.0;
    for (double v : samples) {
        s += std::max(best - v, 0.0);
    }
    return s / static_cast<double>(samples.size());
}

Index incumbent_index(std::span<const double> means) {
    if (means.empty()) {
        throw ArgumentError("incumbent needs at least one observation");
    }
    Index best = 0;
    for (std::size_t i = 1; i < means.size(); ++i) {
        if (means[i] < means[static_cast<std::size_t>(best)]) {
            best = static_cast<Index>(i);
        }
    }
    return best;
}

namespace {

constexpr double kZ975 = 1.959963984540054;

double quantile_sorted(const std::vector<double>& v, double p) {
    const double h = p * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

void summarize_gaussian(const JointGaussian& post, const std::vector<Index>& cols, PosteriorSummary& out) {
    const auto p = static_cast<Index>(cols.size());
    out.mean.resize(p);
    out.sd.resize(p);
    for (Index i = 0; i < p; ++i) {
        out.mean(i) = post.mean(cols[static_cast<std::size_t>(i)]);
        const double v = post.cov(cols[static_cast<std::size_t>(i)], cols[static_cast<std::size_t>(i)]);
        out.sd(i) = std::sqrt(std::max(v, 0.0));
    }
    out.lower95 = out.mean - kZ975 * out.sd;
    out.upper95 = out.mean + kZ975 * out.sd;
}

void summarize_samples(const Matrix& samples, PosteriorSummary& out) {
    const Index p = samples.cols();
    const auto s = static_cast<double>(samples.rows());
    out.mean = samples.colwise().mean().transpose();
    out.sd.resize(p);
    out.lower95.resize(p);
    out.upper95.resize(p);
    std::vector<double> col(static_cast<std::size_t>(samples.rows()));
    for (Index j = 0; j < p; ++j) {
        const double ss = (samples.col(j).array() - out.mean(j)).square().sum();
        out.sd(j) = samples.rows() > 1 ? std::sqrt(ss / (s - 1.0)) : 0.0;
        for (Index r = 0; r < samples.rows(); ++r) {
            col[static_cast<std::size_t>(r)] = samples(r, j);
        }
        std::sort(col.begin(), col.end());
        out.lower95(j) = quantile_sorted(col, 0.025);
        out.upper95(j) = quantile_sorted(col, 0.975);
    }
}

}  // namespace

PosteriorSummary predict(const Surrogate& s, const Matrix& points, std::size_t mc_samples,
                         std::uint64_t seed, std::size_t max_tries) {
    const Index n = s.data.size();
    const Index d = s.theta.dim();
    if (n < 1) {
        throw ArgumentError("predict needs at least one observation");
    }
    if (points.cols() != d || s.data.dim() != d) {
        throw ArgumentError("predict: dimension mismatch");
    }
    const bool constrained = s.spec.active();
    std::vector<ConstraintRequest> requests;
    if (constrained) {
        if (s.spec.dim() != d) {
            throw ArgumentError("constraint spec dimension does not match the surrogate");
        }
        requests = build_derivative_requests(s.spec);
    }

    std::vector<Coordinate> layout;
    layout.reserve(static_cast<std::size_t>(n + points.rows()) + requests.size());
    for (Index i = 0; i < n; ++i) {
        layout.push_back(Coordinate::value(s.data.points.row(i).transpose()));
    }
    for (Index i = 0; i < points.rows(); ++i) {
        layout.push_back(Coordinate::value(points.row(i).transpose()));
    }
    for (const auto& r : requests) {
        layout.push_back(r.coord);
    }
    const JointGaussian prior = prior_joint(std::move(layout), s.theta);
    std::vector<Index> obs(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) {
        obs[static_cast<std::size_t>(i)] = i;
    }
    const JointGaussian post = condition(prior, obs, s.data.values, s.theta.noise_var_sigma2);

    PosteriorSummary out;
    out.points = points;
    std::vector<Index> value_cols(static_cast<std::size_t>(points.rows()));
    for (Index i = 0; i < points.rows(); ++i) {
        value_cols[static_cast<std::size_t>(i)] = i;
    }
    if (!constrained) {
        summarize_gaussian(post, value_cols, out);
        return out;
    }

    ConstrainedPosterior cp;
    try {
        cp = sample_constrained_posterior(post, s.spec, mc_samples, seed, max_tries);
        out.acceptance_rate = cp.acceptance_rate;
    } catch (const PartialSampleError& e) {
        out.acceptance_rate = e.partial().acceptance_rate;
        try {
            cp = sample_constrained_hmc(post, s.spec, mc_samples, derive_seed(seed, 0x48));
            out.used_hmc = true;
        } catch (const NumericalError&) {
            cp = e.partial();
            out.partial = true;
        }
    }
    if (cp.samples.rows() == 0) {
        out.unconstrained_fallback = true;
        summarize_gaussian(post, value_cols, out);
        return out;
    }
    out.constrained = true;
    out.samples = cp.samples;
    summarize_samples(out.samples, out);
    return out;
}

Vector ei_values(const PosteriorSummary& post, std::span<const Index> cols, double best) {
    Vector ei(static_cast<Index>(cols.size()));
    std::vector<double> buf(static_cast<std::size_t>(post.samples.rows()));
    for (std::size_t i = 0; i < cols.size(); ++i) {
        const Index c = cols[i];
        if (post.constrained) {
            for (Index r = 0; r < post.samples.rows(); ++r) {
                buf[static_cast<std::size_t>(r)] = post.samples(r, c);
            }
            ei(static_cast<Index>(i)) = ei_mc(buf, best);
        } else {
            ei(static_cast<Index>(i)) = ei_closed(post.mean(c), post.sd(c), best);
        }
    }
    return ei;
}

Proposal select_by_ei(const Vector& ei, const std::vector<bool>& queried, std::uint64_t seed) {
    if (ei.size() == 0) {
        throw ArgumentError("select_by_ei needs at least one candidate");
    }
    Proposal p;
    Index best = 0;
    for (Index i = 1; i < ei.size(); ++i) {
        if (ei(i) > ei(best)) {
            best = i;
        }
    }
    if (ei(best) > 0.0) {
        p.candidate = best;
        p.ei = ei(best);
        return p;
    }
    std::vector<Index> pool;
    for (Index i = 0; i < ei.size(); ++i) {
        if (static_cast<std::size_t>(i) >= queried.size() || !queried[static_cast<std::size_t>(i)]) {
            pool.push_back(i);
        }
    }
    if (pool.empty()) {
        for (Index i = 0; i < ei.size(); ++i) {
            pool.push_back(i);
        }
    }
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    p.candidate = pool[pick(rng)];
    p.ei = 0.0;
    p.random_fallback = true;
    return p;
}

StepAnalysis analyze_step(const Matrix& candidates, const Surrogate& s, std::size_t mc_samples,
                          std::uint64_t seed, std::size_t max_tries) {
    if (candidates.rows() == 0) {
        throw ArgumentError("propose_next needs at least one candidate");
    }
    const Index nc = candidates.rows();
    const Index n = s.data.size();
    const Index d = candidates.cols();

    // Prediction columns: all candidates, then observed points not already
    // among them.
    std::vector<Vector> extra;
    std::vector<Index> obs_col(static_cast<std::size_t>(n));
    std::vector<bool> queried(static_cast<std::size_t>(nc), false);
    for (Index i = 0; i < n; ++i) {
        const Vector p = s.data.points.row(i).transpose();
        Index col = -1;
        for (Index c = 0; c < nc && col < 0; ++c) {
            if (candidates.row(c).transpose() == p) {
                col = c;
            }
        }
        if (col >= 0) {
            queried[static_cast<std::size_t>(col)] = true;
        } else {
            for (std::size_t e = 0; e < extra.size() && col < 0; ++e) {
                if (extra[e] == p) {
                    col = nc + static_cast<Index>(e);
                }
            }
            if (col < 0) {
                col = nc + static_cast<Index>(extra.size());
                extra.push_back(p);
            }
        }
        obs_col[static_cast<std::size_t>(i)] = col;
    }
    Matrix pred(nc + static_cast<Index>(extra.size()), d);
    pred.topRows(nc) = candidates;
    for (std::size_t e = 0; e < extra.size(); ++e) {
        pred.row(nc + static_cast<Index>(e)) = extra[e].transpose();
    }

    StepAnalysis out;
    out.posterior = predict(s, pred, mc_samples, derive_seed(seed, 0x01), max_tries);

    std::vector<double> obs_means(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) {
        obs_means[static_cast<std::size_t>(i)] = out.posterior.mean(obs_col[static_cast<std::size_t>(i)]);
    }
    const Index inc = incumbent_index(obs_means);
    const Index inc_col = obs_col[static_cast<std::size_t>(inc)];
    out.incumbent.index = inc;
    out.incumbent.point = s.data.points.row(inc).transpose();
    out.incumbent.posterior_expected_value = out.posterior.mean(inc_col);
    out.incumbent.lower95 = out.posterior.lower95(inc_col);
    out.incumbent.upper95 = out.posterior.upper95(inc_col);

    std::vector<Index> cand_cols(static_cast<std::size_t>(nc));
    for (Index c = 0; c < nc; ++c) {
        cand_cols[static_cast<std::size_t>(c)] = c;
    }
    const Vector ei = ei_values(out.posterior, cand_cols, out.incumbent.posterior_expected_value);
    out.proposal = select_by_ei(ei, queried, derive_seed(seed, 0x02));
    out.proposal.point = candidates.row(out.proposal.candidate).transpose();
    return out;
}

Proposal propose_next(const Matrix& candidates, const Surrogate& s, std::size_t mc_samples,
                      std::uint64_t seed, std::size_t max_tries) {
    return analyze_step(candidates, s, mc_samples, seed, max_tries).proposal;
}

}  // namespace shapebo
