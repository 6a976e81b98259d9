#include "shapebo/tmvn.hpp"

#include "shapebo/linalg.hpp"
#include "shapebo/normal.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <vector>

namespace shapebo {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kInvSqrt2Pi = 0.39894228040143267793994605993438;

struct NotPositiveDefinite {};

// Lower Cholesky factor of a permuted covariance, with the permutation chosen
// greedily: at step j the remaining variable with the smallest conditional box
// probability goes next.
struct PermutedFactor {
    Matrix chol;
    Vector lower;
    Vector upper;
    std::vector<Index> perm;  // chol row j corresponds to original coordinate perm[j]
};

PermutedFactor greedy_cholesky(const Matrix& cov_in, const Vector& l_in, const Vector& u_in) {
    const Index d = cov_in.rows();
    Matrix cov = cov_in;
    Vector l = l_in;
    Vector u = u_in;
    std::vector<Index> perm(static_cast<std::size_t>(d));
    std::iota(perm.begin(), perm.end(), Index{0});
    Matrix chol = Matrix::Zero(d, d);
    Vector z = Vector::Zero(d);

    for (Index j = 0; j < d; ++j) {
        Index best = j;
        double best_pr = kInf;
        for (Index i = j; i < d; ++i) {
            const double s2 = cov(i, i) - chol.row(i).head(j).squaredNorm();
            const double s = std::sqrt(std::max(s2, std::numeric_limits<double>::epsilon()));
            const double shift = chol.row(i).head(j).dot(z.head(j));
            const double pr = normal::log_prob((l(i) - shift) / s, (u(i) - shift) / s);
            if (pr < best_pr) {
                best_pr = pr;
                best = i;
            }
        }
        if (best != j) {
            cov.row(j).swap(cov.row(best));
            cov.col(j).swap(cov.col(best));
            chol.row(j).swap(chol.row(best));
            std::swap(l(j), l(best));
            std::swap(u(j), u(best));
            std::swap(perm[static_cast<std::size_t>(j)], perm[static_cast<std::size_t>(best)]);
        }
        const double pivot = cov(j, j) - chol.row(j).head(j).squaredNorm();
        if (!(pivot > 0.0) || !std::isfinite(pivot)) {
            throw NotPositiveDefinite{};
        }
        const double ljj = std::sqrt(pivot);
        chol(j, j) = ljj;
        for (Index i = j + 1; i < d; ++i) {
            chol(i, j) = (cov(i, j) - chol.row(i).head(j).dot(chol.row(j).head(j))) / ljj;
        }
        const double shift = chol.row(j).head(j).dot(z.head(j));
        z(j) = normal::truncated_mean((l(j) - shift) / ljj, (u(j) - shift) / ljj);
        if (!std::isfinite(z(j))) {
            z(j) = 0.0;
        }
    }
    return {std::move(chol), std::move(l), std::move(u), std::move(perm)};
}

PermutedFactor greedy_cholesky_jittered(const Matrix& cov, const Vector& l, const Vector& u) {
    const double scale = diagonal_scale(cov);
    double jitter = kJitter * scale;
    for (;;) {
        Matrix work = cov;
        work.diagonal().array() += jitter;
        try {
            return greedy_cholesky(work, l, u);
        } catch (const NotPositiveDefinite&) {
            jitter *= 10.0;
            if (jitter > 1e-3 * scale * 1.0000001) {
                throw NumericalError("truncated-normal covariance is not positive definite after jitter");
            }
        }
    }
}

// Tilted log-weight machinery on the unit-diagonal scaled problem:
//   lt <= (I + L) x <= ut,  L strictly lower triangular.
class TiltedProblem {
public:
    TiltedProblem(Matrix strict_lower, Vector lt, Vector ut)
        : l_(std::move(strict_lower)), lt_(std::move(lt)), ut_(std::move(ut)), d_(lt_.size()) {}

    Index dim() const { return d_; }

    // Residual of the saddlepoint equations at y = [x(0..d-2); mu(0..d-2)]
    // together with its Jacobian.
    bool gradient(const Vector& y, Vector& grad, Matrix* jac) const {
        const Index k = d_ - 1;
        Vector x = Vector::Zero(d_);
        Vector mu = Vector::Zero(d_);
        x.head(k) = y.head(k);
        mu.head(k) = y.tail(k);
        const Vector c = l_ * x;
        Vector lo = lt_ - mu - c;
        Vector hi = ut_ - mu - c;
        Vector pl(d_), pu(d_), p(d_);
        for (Index i = 0; i < d_; ++i) {
            const double w = normal::log_prob(lo(i), hi(i));
            if (!std::isfinite(w)) {
                return false;
            }
            pl(i) = std::isfinite(lo(i)) ? std::exp(-0.5 * lo(i) * lo(i) - w) * kInvSqrt2Pi : 0.0;
            pu(i) = std::isfinite(hi(i)) ? std::exp(-0.5 * hi(i) * hi(i) - w) * kInvSqrt2Pi : 0.0;
            p(i) = pl(i) - pu(i);
        }
        grad.resize(2 * k);
        grad.head(k) = -mu.head(k) + (l_.transpose() * p).head(k);
        grad.tail(k) = (mu - x + p).head(k);
        if (!grad.allFinite()) {
            return false;
        }
        if (jac != nullptr) {
            Vector dp(d_);
            for (Index i = 0; i < d_; ++i) {
                const double a = std::isfinite(lo(i)) ? lo(i) : 0.0;
                const double b = std::isfinite(hi(i)) ? hi(i) : 0.0;
                dp(i) = -p(i) * p(i) + a * pl(i) - b * pu(i);
            }
            const Matrix dl = dp.asDiagonal() * l_;
            const Matrix mx = (-Matrix::Identity(d_, d_) + dl).topLeftCorner(k, k);
            const Matrix xx = (l_.transpose() * dl).topLeftCorner(k, k);
            jac->resize(2 * k, 2 * k);
            jac->topLeftCorner(k, k) = xx;
            jac->topRightCorner(k, k) = mx.transpose();
            jac->bottomLeftCorner(k, k) = mx;
            jac->bottomRightCorner(k, k) = (Vector::Ones(k) + dp.head(k)).asDiagonal();
        }
        return true;
    }

    // log-weight psi(x; mu), x and mu of full length d with last entries 0.
    double psi(const Vector& x, const Vector& mu) const {
        const Vector c = l_ * x;
        double s = 0.0;
        for (Index i = 0; i < d_; ++i) {
            s += normal::log_prob(lt_(i) - mu(i) - c(i), ut_(i) - mu(i) - c(i)) + 0.5 * mu(i) * mu(i) -
                 x(i) * mu(i);
        }
        return s;
    }

    // One tilted proposal; returns its log-weight and writes the draw into z.
    double propose(const Vector& mu, Vector& z, std::mt19937_64& rng) const {
        double p = 0.0;
        for (Index i = 0; i < d_; ++i) {
            const double col = l_.row(i).head(i).dot(z.head(i));
            const double lo = lt_(i) - mu(i) - col;
            const double hi = ut_(i) - mu(i) - col;
            z(i) = mu(i) + normal::sample_truncated(lo, hi, rng);
            p += normal::log_prob(lo, hi) + 0.5 * mu(i) * mu(i) - mu(i) * z(i);
        }
        return p;
    }

private:
    Matrix l_;
    Vector lt_;
    Vector ut_;
    Index d_;
};

// Damped Newton on the saddlepoint equations. Returns false if it does not
// reach a stationary point.
bool solve_saddlepoint(const TiltedProblem& prob, Vector& y) {
    const Index n = 2 * (prob.dim() - 1);
    y = Vector::Zero(n);
    Vector grad;
    Matrix jac;
    if (!prob.gradient(y, grad, &jac)) {
        return false;
    }
    double merit = grad.squaredNorm();
    for (int iter = 0; iter < 200; ++iter) {
        if (grad.lpNorm<Eigen::Infinity>() < 1e-10) {
            return true;
        }
        const Vector step = jac.partialPivLu().solve(-grad);
        if (!step.allFinite()) {
            return false;
        }
        double t = 1.0;
        bool improved = false;
        Vector trial_grad;
        for (int back = 0; back < 40; ++back) {
            const Vector trial = y + t * step;
            if (prob.gradient(trial, trial_grad, nullptr)) {
                const double m = trial_grad.squaredNorm();
                if (m < merit) {
                    y = trial;
                    improved = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if (!improved) {
            return grad.lpNorm<Eigen::Infinity>() < 1e-6;
        }
        prob.gradient(y, grad, &jac);
        merit = grad.squaredNorm();
    }
    return grad.lpNorm<Eigen::Infinity>() < 1e-6;
}

Index tightest_coordinate(const Matrix& cov, const Vector& l, const Vector& u, double* out_lp) {
    Index best = 0;
    double best_lp = kInf;
    for (Index i = 0; i < l.size(); ++i) {
        const double s = std::sqrt(std::max(cov(i, i), 1e-300));
        const double lp = normal::log_prob(l(i) / s, u(i) / s);
        if (lp < best_lp) {
            best_lp = lp;
            best = i;
        }
    }
    if (out_lp != nullptr) {
        *out_lp = best_lp;
    }
    return best;
}

[[noreturn]] void throw_infeasible(const Matrix& cov, const Vector& l, const Vector& u, double log_prob) {
    double marginal = 0.0;
    const Index k = tightest_coordinate(cov, l, u, &marginal);
    std::ostringstream msg;
    msg << "truncation box is numerically infeasible (estimated log-probability " << log_prob
        << "); tightest coordinate " << k << " has marginal log-probability " << marginal;
    throw InfeasibleBox(msg.str(), k, log_prob);
}

// Systematic-scan Gibbs on the centered problem; returns count x d draws.
Matrix gibbs_draws(const Matrix& cov, const Vector& l, const Vector& u, std::size_t count,
                   std::mt19937_64& rng) {
    const Index d = cov.rows();
    const JitteredCholesky chol(cov, diagonal_scale(cov));
    const Matrix prec = chol.solve(Matrix(Matrix::Identity(d, d)));

    Vector x(d);
    for (Index i = 0; i < d; ++i) {
        const double sd = std::sqrt(std::max(cov(i, i), 1e-300));
        if (std::isfinite(l(i)) && std::isfinite(u(i))) {
            x(i) = 0.5 * (l(i) + u(i));
        } else if (std::isfinite(l(i))) {
            x(i) = std::max(0.0, l(i) + 0.1 * sd);
        } else if (std::isfinite(u(i))) {
            x(i) = std::min(0.0, u(i) - 0.1 * sd);
        } else {
            x(i) = 0.0;
        }
    }
    Vector qx = prec * x;

    auto sweep = [&]() {
        for (Index i = 0; i < d; ++i) {
            const double qii = prec(i, i);
            const double var = 1.0 / qii;
            const double sd = std::sqrt(var);
            const double cond_mean = -(qx(i) - qii * x(i)) * var;
            const double z = normal::sample_truncated((l(i) - cond_mean) / sd, (u(i) - cond_mean) / sd, rng);
            double xi = cond_mean + sd * z;
            xi = std::clamp(xi, l(i), u(i));
            const double delta = xi - x(i);
            if (delta != 0.0) {
                qx += delta * prec.col(i);
                x(i) = xi;
            }
        }
    };

    constexpr int kBurnSweeps = 100;
    constexpr int kThinSweeps = 10;  // 10 d coordinate updates between kept draws
    for (int s = 0; s < kBurnSweeps; ++s) {
        sweep();
    }
    Matrix out(static_cast<Index>(count), d);
    for (std::size_t c = 0; c < count; ++c) {
        for (int s = 0; s < kThinSweeps; ++s) {
            sweep();
        }
        out.row(static_cast<Index>(c)) = x.transpose();
    }
    return out;
}

double log_mean_exp(const std::vector<double>& v) {
    const double m = *std::max_element(v.begin(), v.end());
    if (!std::isfinite(m)) {
        return m;
    }
    double s = 0.0;
    for (double a : v) {
        s += std::exp(a - m);
    }
    return m + std::log(s / static_cast<double>(v.size()));
}

}  // namespace

TmvnResult sample_tmvn(const Vector& mean, const Matrix& cov, const Vector& lower, const Vector& upper,
                       std::size_t count, std::uint64_t seed, TmvnMethod method) {
    const Index d = mean.size();
    if (d == 0 || cov.rows() != d || cov.cols() != d || lower.size() != d || upper.size() != d) {
        throw ArgumentError("sample_tmvn: inconsistent dimensions");
    }
    for (Index i = 0; i < d; ++i) {
        if (!(lower(i) < upper(i))) {
            throw ArgumentError("sample_tmvn: lower must be strictly below upper at coordinate " +
                                std::to_string(i));
        }
    }
    if (!mean.allFinite() || !cov.allFinite()) {
        throw ArgumentError("sample_tmvn: non-finite mean or covariance");
    }

    std::mt19937_64 rng(seed);
    const Vector l = lower - mean;
    const Vector u = upper - mean;
    TmvnResult res;
    res.draws.resize(static_cast<Index>(count), d);

    if (d == 1) {
        const double s = std::sqrt(cov(0, 0) + kJitter * std::max(cov(0, 0), 1e-300));
        res.log_prob = normal::log_prob(l(0) / s, u(0) / s);
        if (res.log_prob < kInfeasibleLogProb) {
            throw_infeasible(cov, l, u, res.log_prob);
        }
        for (std::size_t c = 0; c < count; ++c) {
            res.draws(static_cast<Index>(c), 0) = mean(0) + s * normal::sample_truncated(l(0) / s, u(0) / s, rng);
        }
        return res;
    }

    const PermutedFactor pf = greedy_cholesky_jittered(cov, l, u);
    const Vector diag = pf.chol.diagonal();
    Matrix scaled = diag.cwiseInverse().asDiagonal() * pf.chol;
    scaled.diagonal().setZero();
    const TiltedProblem prob(scaled, pf.lower.cwiseQuotient(diag), pf.upper.cwiseQuotient(diag));

    Vector y;
    const bool converged = solve_saddlepoint(prob, y);
    Vector x_star = Vector::Zero(d);
    Vector mu = Vector::Zero(d);
    if (converged) {
        x_star.head(d - 1) = y.head(d - 1);
        mu.head(d - 1) = y.tail(d - 1);
    }
    const double psi_star = converged ? prob.psi(x_star, mu) : kInf;

    // Pilot batch: estimates the box probability and the acceptance rate; its
    // accepted members are kept.
    constexpr std::size_t kPilot = 1000;
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<Vector> accepted;
    accepted.reserve(count);
    std::vector<double> weights;
    weights.reserve(kPilot);
    Vector z = Vector::Zero(d);
    auto try_one = [&](bool record) {
        const double p = prob.propose(mu, z, rng);
        if (record) {
            weights.push_back(p);
        }
        if (converged && accepted.size() < count && std::log(unif(rng)) < p - psi_star) {
            accepted.push_back(z);
        }
    };
    for (std::size_t i = 0; i < kPilot; ++i) {
        try_one(true);
    }
    res.log_prob = log_mean_exp(weights);
    if (!(res.log_prob >= kInfeasibleLogProb)) {
        throw_infeasible(cov, l, u, res.log_prob);
    }
    res.acceptance_rate = converged ? std::min(1.0, std::exp(res.log_prob - psi_star)) : 0.0;

    const Matrix& lfac = pf.chol;
    auto emit = [&](std::size_t row, const Vector& xs) {
        const Vector v = lfac * xs;
        for (Index j = 0; j < d; ++j) {
            res.draws(static_cast<Index>(row), pf.perm[static_cast<std::size_t>(j)]) = v(j);
        }
    };

    if (method == TmvnMethod::Auto && converged && res.acceptance_rate >= kGibbsFallbackRate) {
        while (accepted.size() < count) {
            try_one(false);
        }
        for (std::size_t c = 0; c < count; ++c) {
            emit(c, accepted[c]);
        }
    } else {
        res.used_gibbs = true;
        res.draws = gibbs_draws(cov, l, u, count, rng);
    }
    res.draws.rowwise() += mean.transpose();
    // Jitter and rounding can push a coordinate a hair outside the box.
    for (Index r = 0; r < res.draws.rows(); ++r) {
        for (Index j = 0; j < d; ++j) {
            res.draws(r, j) = std::clamp(res.draws(r, j), lower(j), upper(j));
        }
    }
    return res;
}

}  // namespace shapebo
