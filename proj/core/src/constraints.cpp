#include "shapebo/constraints.hpp"

#include "shapebo/linalg.hpp"
#include "shapebo/tmvn.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <string>

namespace shapebo {

std::string_view to_string(Shape s) {
    switch (s) {
        case Shape::None: return "none";
        case Shape::MonotoneIncreasing: return "increasing";
        case Shape::MonotoneDecreasing: return "decreasing";
        case Shape::Convex: return "convex";
        case Shape::Concave: return "concave";
        case Shape::Quasiconvex: return "quasiconvex";
    }
    return "none";
}

std::optional<Shape> parse_shape(std::string_view name) {
    std::string key;
    for (char c : name) {
        if (c == '-' || c == ' ') {
            c = '_';
        }
        key.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    if (key == "none" || key == "unconstrained") return Shape::None;
    if (key == "increasing" || key == "monotone_increasing") return Shape::MonotoneIncreasing;
    if (key == "decreasing" || key == "monotone_decreasing") return Shape::MonotoneDecreasing;
    if (key == "convex") return Shape::Convex;
    if (key == "concave") return Shape::Concave;
    if (key == "quasiconvex" || key == "unimodal") return Shape::Quasiconvex;
    return std::nullopt;
}

bool ConstraintSpec::active() const {
    return std::any_of(per_dim.begin(), per_dim.end(), [](Shape s) { return s != Shape::None; });
}

bool ConstraintSpec::has_quasiconvex() const {
    return std::find(per_dim.begin(), per_dim.end(), Shape::Quasiconvex) != per_dim.end();
}

ConstraintSpec ConstraintSpec::unconstrained(Index d) {
    ConstraintSpec s;
    s.per_dim.assign(static_cast<std::size_t>(d), Shape::None);
    s.grid = Matrix(0, d);
    return s;
}

Matrix enforcement_grid(const Matrix& lhs, const Matrix& observed) {
    if (lhs.rows() > 0 && observed.rows() > 0 && lhs.cols() != observed.cols()) {
        throw ArgumentError("enforcement_grid: dimension mismatch");
    }
    const Index d = lhs.rows() > 0 ? lhs.cols() : observed.cols();
    std::vector<Vector> rows;
    rows.reserve(static_cast<std::size_t>(lhs.rows() + observed.rows()));
    auto present = [&](const Vector& p) {
        return std::any_of(rows.begin(), rows.end(), [&](const Vector& q) { return q == p; });
    };
    for (Index i = 0; i < lhs.rows(); ++i) {
        rows.emplace_back(lhs.row(i).transpose());
    }
    for (Index i = 0; i < observed.rows(); ++i) {
        Vector p = observed.row(i).transpose();
        if (!present(p)) {
            rows.push_back(std::move(p));
        }
    }
    Matrix out(static_cast<Index>(rows.size()), d);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out.row(static_cast<Index>(i)) = rows[i].transpose();
    }
    return out;
}

std::vector<ConstraintRequest> build_derivative_requests(const ConstraintSpec& spec) {
    std::vector<ConstraintRequest> out;
    if (!spec.active()) {
        return out;
    }
    if (spec.grid.cols() != spec.dim()) {
        throw ArgumentError("constraint grid has " + std::to_string(spec.grid.cols()) +
                            " columns for a " + std::to_string(spec.dim()) + "-dimensional spec");
    }
    for (Index j = 0; j < spec.dim(); ++j) {
        int order = 0;
        BoundKind bound = BoundKind::NonNegative;
        switch (spec.per_dim[static_cast<std::size_t>(j)]) {
            case Shape::None: continue;
            case Shape::MonotoneIncreasing: order = 1; bound = BoundKind::NonNegative; break;
            case Shape::MonotoneDecreasing: order = 1; bound = BoundKind::NonPositive; break;
            case Shape::Convex: order = 2; bound = BoundKind::NonNegative; break;
            case Shape::Concave: order = 2; bound = BoundKind::NonPositive; break;
            case Shape::Quasiconvex: order = 1; bound = BoundKind::QuasiconvexPattern; break;
        }
        for (Index g = 0; g < spec.grid.rows(); ++g) {
            out.push_back({Coordinate::derivative(spec.grid.row(g).transpose(), static_cast<int>(j), order),
                           bound});
        }
    }
    return out;
}

bool quasiconvex_pattern_ok(std::span<const double> coords, std::span<const double> derivs) {
    if (coords.size() != derivs.size()) {
        throw ArgumentError("quasiconvex_pattern_ok: coordinate and derivative lengths differ");
    }
    double last_negative = -std::numeric_limits<double>::infinity();
    double first_positive = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < coords.size(); ++i) {
        if (derivs[i] < -kZeroDerivativeTol) {
            last_negative = std::max(last_negative, coords[i]);
        } else if (derivs[i] > kZeroDerivativeTol) {
            first_positive = std::min(first_positive, coords[i]);
        }
    }
    return last_negative < first_positive;
}

namespace {

bool same_coordinate(const Coordinate& a, const Coordinate& b) {
    if (a.partial.order != b.partial.order) return false;
    if (a.partial.order != 0 && a.partial.dim != b.partial.dim) return false;
    return a.point.size() == b.point.size() && a.point == b.point;
}

Matrix sub_cov(const Matrix& cov, const std::vector<Index>& rows, const std::vector<Index>& cols) {
    Matrix out(static_cast<Index>(rows.size()), static_cast<Index>(cols.size()));
    for (std::size_t a = 0; a < rows.size(); ++a) {
        for (std::size_t b = 0; b < cols.size(); ++b) {
            out(static_cast<Index>(a), static_cast<Index>(b)) = cov(rows[a], cols[b]);
        }
    }
    return out;
}

Vector sub_vec(const Vector& v, const std::vector<Index>& idx) {
    Vector out(static_cast<Index>(idx.size()));
    for (std::size_t a = 0; a < idx.size(); ++a) {
        out(static_cast<Index>(a)) = v(idx[a]);
    }
    return out;
}

Matrix standard_normals(Index rows, Index cols, std::mt19937_64& rng) {
    std::normal_distribution<double> n01(0.0, 1.0);
    Matrix z(rows, cols);
    for (Index c = 0; c < cols; ++c) {
        for (Index r = 0; r < rows; ++r) {
            z(r, c) = n01(rng);
        }
    }
    return z;
}

// Gaussian law of `target` given `given`, as an affine map plus a Cholesky
// factor of the residual covariance.
struct ConditionalLaw {
    Vector base_mean;   // E[target] before conditioning
    Vector given_mean;  // E[given]
    Matrix gain;        // |target| x |given|
    Matrix chol;        // residual covariance factor
};

ConditionalLaw conditional_law(const Vector& mean_t, const Matrix& cov_tt, const Vector& mean_g,
                               const Matrix& cov_gg, const Matrix& cov_tg) {
    ConditionalLaw law;
    law.base_mean = mean_t;
    law.given_mean = mean_g;
    Matrix resid = cov_tt;
    if (cov_gg.rows() > 0) {
        const JitteredCholesky chol_g(cov_gg, diagonal_scale(cov_gg));
        law.gain = chol_g.solve(Matrix(cov_tg.transpose())).transpose();
        resid.noalias() -= law.gain * cov_tg.transpose();
        resid = 0.5 * (resid + resid.transpose()).eval();
    } else {
        law.gain = Matrix::Zero(cov_tt.rows(), 0);
    }
    if (resid.rows() > 0) {
        const JitteredCholesky chol_r(resid, diagonal_scale(cov_tt));
        law.chol = chol_r.matrix_l();
    } else {
        law.chol = Matrix(0, 0);
    }
    return law;
}

// Rows of `given` are conditioning draws; returns one target draw per row.
Matrix draw_conditional(const ConditionalLaw& law, const Matrix& given, Index rows, std::mt19937_64& rng) {
    const Index t = law.base_mean.size();
    Matrix out(rows, t);
    out.rowwise() = law.base_mean.transpose();
    if (law.gain.cols() > 0) {
        out.noalias() += (given.rowwise() - law.given_mean.transpose()) * law.gain.transpose();
    }
    if (t > 0) {
        const Matrix z = standard_normals(t, rows, rng);
        out.noalias() += (law.chol * z).transpose();
    }
    return out;
}

struct PatternGroup {
    std::vector<Index> order;   // positions within the quasiconvex block, ascending coordinate
    std::vector<double> coords;
};

bool patterns_ok(const std::vector<PatternGroup>& groups, const Eigen::Ref<const Eigen::RowVectorXd>& q) {
    for (const auto& g : groups) {
        double last_negative = -std::numeric_limits<double>::infinity();
        double first_positive = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < g.order.size(); ++i) {
            const double v = q(g.order[i]);
            if (v < -kZeroDerivativeTol) {
                last_negative = g.coords[i];
            } else if (v > kZeroDerivativeTol && first_positive == std::numeric_limits<double>::infinity()) {
                first_positive = g.coords[i];
            }
        }
        if (!(last_negative < first_positive)) {
            return false;
        }
    }
    return true;
}

// Everything both drivers need: where each request sits in the layout, the
// sign box of the signed block, the changepoint groups, and the conditional
// laws Q | S and V | (S, Q).
struct Setup {
    std::vector<Index> signed_idx;
    std::vector<std::size_t> signed_req;
    std::vector<Index> qc_idx;
    std::vector<std::size_t> qc_req;
    Vector lower;
    Vector upper;
    std::vector<PatternGroup> groups;
    Vector mean_s;
    Matrix cov_ss;
    ConditionalLaw q_law;
    ConditionalLaw v_law;

    Index ns() const { return static_cast<Index>(signed_idx.size()); }
    Index nq() const { return static_cast<Index>(qc_idx.size()); }
};

Setup make_setup(const JointGaussian& post, const ConstraintSpec& spec, ConstrainedPosterior& out) {
    if (post.size() == 0 || post.cov.rows() != post.size() ||
        static_cast<Index>(post.layout.size()) != post.size()) {
        throw ArgumentError("sample_constrained_posterior: malformed posterior");
    }
    out.posterior = post;
    out.requests = build_derivative_requests(spec);
    for (Index i = 0; i < post.size(); ++i) {
        if (post.layout[static_cast<std::size_t>(i)].is_value()) {
            out.value_idx.push_back(i);
        }
    }

    Setup s;
    std::vector<double> lo_list, hi_list;
    for (std::size_t r = 0; r < out.requests.size(); ++r) {
        const auto& req = out.requests[r];
        Index found = -1;
        for (Index i = 0; i < post.size(); ++i) {
            if (same_coordinate(post.layout[static_cast<std::size_t>(i)], req.coord)) {
                found = i;
                break;
            }
        }
        if (found < 0) {
            throw ArgumentError("posterior layout lacks a derivative coordinate required by the constraint spec");
        }
        if (req.bound == BoundKind::QuasiconvexPattern) {
            s.qc_idx.push_back(found);
            s.qc_req.push_back(r);
        } else {
            s.signed_idx.push_back(found);
            s.signed_req.push_back(r);
            const bool nonneg = req.bound == BoundKind::NonNegative;
            lo_list.push_back(nonneg ? 0.0 : -std::numeric_limits<double>::infinity());
            hi_list.push_back(nonneg ? std::numeric_limits<double>::infinity() : 0.0);
        }
    }
    s.lower = Eigen::Map<Vector>(lo_list.data(), static_cast<Index>(lo_list.size()));
    s.upper = Eigen::Map<Vector>(hi_list.data(), static_cast<Index>(hi_list.size()));

    for (Index j = 0; j < spec.dim(); ++j) {
        if (spec.per_dim[static_cast<std::size_t>(j)] != Shape::Quasiconvex) {
            continue;
        }
        PatternGroup g;
        for (std::size_t q = 0; q < s.qc_req.size(); ++q) {
            if (out.requests[s.qc_req[q]].coord.partial.dim == j) {
                g.order.push_back(static_cast<Index>(q));
            }
        }
        std::stable_sort(g.order.begin(), g.order.end(), [&](Index a, Index b) {
            return out.requests[s.qc_req[static_cast<std::size_t>(a)]].coord.point(j) <
                   out.requests[s.qc_req[static_cast<std::size_t>(b)]].coord.point(j);
        });
        for (Index q : g.order) {
            g.coords.push_back(out.requests[s.qc_req[static_cast<std::size_t>(q)]].coord.point(j));
        }
        s.groups.push_back(std::move(g));
    }

    s.mean_s = sub_vec(post.mean, s.signed_idx);
    s.cov_ss = sub_cov(post.cov, s.signed_idx, s.signed_idx);
    s.q_law = conditional_law(sub_vec(post.mean, s.qc_idx), sub_cov(post.cov, s.qc_idx, s.qc_idx), s.mean_s,
                              s.cov_ss, sub_cov(post.cov, s.qc_idx, s.signed_idx));
    std::vector<Index> deriv_idx = s.signed_idx;
    deriv_idx.insert(deriv_idx.end(), s.qc_idx.begin(), s.qc_idx.end());
    s.v_law = conditional_law(sub_vec(post.mean, out.value_idx), sub_cov(post.cov, out.value_idx, out.value_idx),
                              sub_vec(post.mean, deriv_idx), sub_cov(post.cov, deriv_idx, deriv_idx),
                              sub_cov(post.cov, out.value_idx, deriv_idx));
    return s;
}

// Fills samples and derivative_samples from derivative draws laid out as
// [signed block, quasiconvex block].
void finish(const Setup& s, const Matrix& derivs, std::mt19937_64& rng, ConstrainedPosterior& out) {
    out.samples = draw_conditional(s.v_law, derivs, derivs.rows(), rng);
    out.derivative_samples.resize(derivs.rows(), static_cast<Index>(out.requests.size()));
    for (Index c = 0; c < s.ns(); ++c) {
        out.derivative_samples.col(static_cast<Index>(s.signed_req[static_cast<std::size_t>(c)])) = derivs.col(c);
    }
    for (Index c = 0; c < s.nq(); ++c) {
        out.derivative_samples.col(static_cast<Index>(s.qc_req[static_cast<std::size_t>(c)])) =
            derivs.col(s.ns() + c);
    }
}

// Sign side of every derivative coordinate plus the rule deciding whether a
// zero crossing keeps the draw feasible.
class CrossingRule {
public:
    CrossingRule(const Setup& s) : ns_(s.ns()) {
        const Index m = s.ns() + s.nq();
        group_of_.assign(static_cast<std::size_t>(m), -1);
        coord_.assign(static_cast<std::size_t>(m), 0.0);
        for (std::size_t g = 0; g < s.groups.size(); ++g) {
            std::vector<Index> members;
            for (std::size_t k = 0; k < s.groups[g].order.size(); ++k) {
                const Index i = ns_ + s.groups[g].order[k];
                group_of_[static_cast<std::size_t>(i)] = static_cast<int>(g);
                coord_[static_cast<std::size_t>(i)] = s.groups[g].coords[k];
                members.push_back(i);
            }
            members_.push_back(std::move(members));
        }
    }

    // Crossing zero at coordinate i from side[i] to -side[i].
    bool may_cross(Index i, const std::vector<int>& side) const {
        const int g = group_of_[static_cast<std::size_t>(i)];
        if (g < 0) {
            return false;
        }
        double last_negative = -std::numeric_limits<double>::infinity();
        double first_positive = std::numeric_limits<double>::infinity();
        for (Index k : members_[static_cast<std::size_t>(g)]) {
            if (k == i) continue;
            const double c = coord_[static_cast<std::size_t>(k)];
            if (side[static_cast<std::size_t>(k)] < 0) {
                last_negative = std::max(last_negative, c);
            } else {
                first_positive = std::min(first_positive, c);
            }
        }
        const double c = coord_[static_cast<std::size_t>(i)];
        return side[static_cast<std::size_t>(i)] < 0 ? c > last_negative : c < first_positive;
    }

private:
    Index ns_;
    std::vector<int> group_of_;
    std::vector<double> coord_;
    std::vector<std::vector<Index>> members_;
};

// A feasible starting point: one sign-box draw, the conditional mean of the
// quasiconvex block, then per group the changepoint with the least squared
// violation; violating entries are moved just inside their required side.
Eigen::RowVectorXd feasible_start(const Setup& s, const Matrix& cov_dd, std::uint64_t seed, std::vector<int>& side) {
    const Index ns = s.ns();
    const Index nq = s.nq();
    Eigen::RowVectorXd d(ns + nq);
    if (ns > 0) {
        d.head(ns) = sample_tmvn(s.mean_s, s.cov_ss, s.lower, s.upper, 1, seed).draws.row(0);
    }
    if (nq > 0) {
        Vector q = s.q_law.base_mean;
        if (ns > 0) {
            q.noalias() += s.q_law.gain * (d.head(ns).transpose() - s.q_law.given_mean);
        }
        d.tail(nq) = q.transpose();
    }
    side.assign(static_cast<std::size_t>(ns + nq), 1);
    for (Index i = 0; i < ns; ++i) {
        side[static_cast<std::size_t>(i)] = std::isfinite(s.upper(i)) ? -1 : 1;
    }
    for (Index i = ns; i < ns + nq; ++i) {
        side[static_cast<std::size_t>(i)] = d(i) < 0.0 ? -1 : 1;
    }
    for (const auto& g : s.groups) {
        const std::size_t k = g.order.size();
        // cost of split t: positives before t plus negatives from t on
        std::vector<double> pos_prefix(k + 1, 0.0), neg_suffix(k + 1, 0.0);
        for (std::size_t t = 0; t < k; ++t) {
            const double v = d(ns + g.order[t]);
            pos_prefix[t + 1] = pos_prefix[t] + (v > 0.0 ? v * v : 0.0);
        }
        for (std::size_t t = k; t-- > 0;) {
            const double v = d(ns + g.order[t]);
            neg_suffix[t] = neg_suffix[t + 1] + (v < 0.0 ? v * v : 0.0);
        }
        std::size_t split = 0;
        for (std::size_t t = 1; t <= k; ++t) {
            if (pos_prefix[t] + neg_suffix[t] < pos_prefix[split] + neg_suffix[split]) {
                split = t;
            }
        }
        for (std::size_t t = 0; t < k; ++t) {
            const Index i = ns + g.order[t];
            const int want = t < split ? -1 : 1;
            side[static_cast<std::size_t>(i)] = want;
            if (static_cast<double>(want) * d(i) <= 0.0) {
                d(i) = want * 1e-6 * std::sqrt(std::max(cov_dd(i, i), 1e-300));
            }
        }
    }
    return d;
}

}  // namespace

ConstrainedPosterior sample_constrained_posterior(const JointGaussian& post, const ConstraintSpec& spec,
                                                  std::size_t count, std::uint64_t seed,
                                                  std::size_t max_tries) {
    if (count == 0) {
        throw ArgumentError("sample_constrained_posterior needs count >= 1");
    }
    ConstrainedPosterior out;
    const Setup s = make_setup(post, spec, out);
    const Index ns = s.ns();
    const Index nq = s.nq();

    std::mt19937_64 rng(derive_seed(seed, 0x5a));
    std::vector<Eigen::RowVectorXd> kept;
    kept.reserve(count);

    std::size_t tries = 0;
    const std::size_t budget = nq > 0 ? std::max(max_tries, std::size_t{1}) : count;
    std::uint64_t batch_no = 0;
    while (kept.size() < count && tries < budget) {
        const std::size_t want = nq > 0 ? std::min<std::size_t>(budget - tries, std::max<std::size_t>(count, 512))
                                        : count - kept.size();
        const auto rows = static_cast<Index>(want);
        Matrix s_draws(rows, ns);
        if (ns > 0) {
            const TmvnResult tr = sample_tmvn(s.mean_s, s.cov_ss, s.lower, s.upper, want,
                                              derive_seed(seed, 0x73, batch_no));
            s_draws = tr.draws;
            out.tmvn_acceptance = tr.acceptance_rate;
            out.used_gibbs = out.used_gibbs || tr.used_gibbs;
        }
        const Matrix q_draws = draw_conditional(s.q_law, s_draws, rows, rng);
        for (Index r = 0; r < rows && kept.size() < count; ++r) {
            ++tries;
            if (nq == 0 || patterns_ok(s.groups, q_draws.row(r))) {
                Eigen::RowVectorXd d(ns + nq);
                d.head(ns) = s_draws.row(r);
                d.tail(nq) = q_draws.row(r);
                kept.push_back(std::move(d));
            }
        }
        ++batch_no;
    }

    const auto n_kept = static_cast<Index>(kept.size());
    Matrix derivs(n_kept, ns + nq);
    for (Index r = 0; r < n_kept; ++r) {
        derivs.row(r) = kept[static_cast<std::size_t>(r)];
    }
    finish(s, derivs, rng, out);
    out.acceptance_rate = tries > 0 ? static_cast<double>(kept.size()) / static_cast<double>(tries) : 0.0;

    if (kept.size() < count) {
        std::ostringstream msg;
        msg << "only " << kept.size() << " of " << count << " constrained draws accepted in " << tries
            << " tries (acceptance rate " << out.acceptance_rate << ")";
        throw PartialSampleError(msg.str(), std::move(out));
    }
    return out;
}

ConstrainedPosterior sample_constrained_hmc(const JointGaussian& post, const ConstraintSpec& spec,
                                            std::size_t count, std::uint64_t seed, const HmcOptions& options) {
    if (count == 0) {
        throw ArgumentError("sample_constrained_hmc needs count >= 1");
    }
    if (options.thin == 0 || !(options.travel_time > 0.0) || options.max_bounces == 0) {
        throw ArgumentError("sample_constrained_hmc: thin, travel_time and max_bounces must be positive");
    }
    ConstrainedPosterior out;
    const Setup s = make_setup(post, spec, out);
    const Index ns = s.ns();
    const Index nq = s.nq();
    const Index m = ns + nq;
    out.used_hmc = true;
    out.acceptance_rate = 1.0;
    std::mt19937_64 rng(derive_seed(seed, 0x5b));

    Matrix derivs(static_cast<Index>(count), m);
    if (m == 0) {
        finish(s, derivs, rng, out);
        return out;
    }

    std::vector<Index> deriv_idx = s.signed_idx;
    deriv_idx.insert(deriv_idx.end(), s.qc_idx.begin(), s.qc_idx.end());
    const Vector mu = sub_vec(post.mean, deriv_idx);
    Matrix sigma = sub_cov(post.cov, deriv_idx, deriv_idx);
    const JitteredCholesky chol(sigma, diagonal_scale(sigma));
    sigma.diagonal().array() += chol.jitter();
    const Matrix L = chol.matrix_l();
    const CrossingRule rule(s);

    std::vector<int> side;
    const Eigen::RowVectorXd start = feasible_start(s, sigma, derive_seed(seed, 0x5c), side);
    // Dynamics of x = d - mu in whitened coordinates: x(t) = a cos t + b sin t.
    Vector a = start.transpose() - mu;
    Vector b(m);
    std::normal_distribution<double> n01(0.0, 1.0);
    Vector v(m);

    constexpr double kTwoPi = 6.283185307179586;
    constexpr double kMinTime = 1e-10;
    const std::size_t total = options.burn_in + count * options.thin;
    std::size_t stored = 0;
    for (std::size_t it = 0; it < total; ++it) {
        for (Index i = 0; i < m; ++i) {
            v(i) = n01(rng);
        }
        b.noalias() = L.triangularView<Eigen::Lower>() * v;
        double left = options.travel_time;
        Index last = -1;
        for (std::size_t bounce = 0; bounce < options.max_bounces; ++bounce) {
            double t_hit = left;
            Index hit = -1;
            for (Index i = 0; i < m; ++i) {
                const double r = std::hypot(a(i), b(i));
                if (r <= std::abs(mu(i))) {
                    continue;
                }
                const double phi = std::atan2(b(i), a(i));
                const double alpha = std::acos(std::clamp(-mu(i) / r, -1.0, 1.0));
                const double floor_t = i == last ? kMinTime : 0.0;
                for (double cand : {phi + alpha, phi - alpha}) {
                    double t = std::fmod(cand, kTwoPi);
                    if (t < 0.0) t += kTwoPi;
                    if (t <= floor_t) t += kTwoPi;
                    if (t < t_hit) {
                        t_hit = t;
                        hit = i;
                    }
                }
            }
            const double c = std::cos(t_hit);
            const double sn = std::sin(t_hit);
            const Vector a_new = a * c + b * sn;
            b = b * c - a * sn;
            a = a_new;
            left -= t_hit;
            if (hit < 0) {
                break;
            }
            a(hit) = -mu(hit);
            const auto h = static_cast<std::size_t>(hit);
            if (rule.may_cross(hit, side)) {
                side[h] = -side[h];
            } else {
                b.noalias() -= (2.0 * b(hit) / sigma(hit, hit)) * sigma.col(hit);
            }
            last = hit;
        }
        if (it >= options.burn_in && (it - options.burn_in + 1) % options.thin == 0) {
            Eigen::RowVectorXd d = (a + mu).transpose();
            for (Index i = 0; i < m; ++i) {
                const double sgn = side[static_cast<std::size_t>(i)];
                d(i) = sgn * std::max(sgn * d(i), 0.0);
            }
            derivs.row(static_cast<Index>(stored++)) = d;
        }
    }
    finish(s, derivs, rng, out);
    return out;
}

}  // namespace shapebo
