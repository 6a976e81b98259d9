#include "shapebo/tmvn.hpp"

#include <Eigen/Cholesky>
#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

using namespace shapebo;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Naive accept-reject from the untruncated Gaussian.
Matrix naive_rejection(const Vector& mean, const Matrix& cov, const Vector& lo, const Vector& hi, Index count,
                       std::uint64_t seed) {
    const Matrix l = Eigen::LLT<Matrix>(cov).matrixL();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z(0.0, 1.0);
    Matrix out(count, mean.size());
    Vector e(mean.size());
    for (Index r = 0; r < count;) {
        for (Index i = 0; i < e.size(); ++i) e(i) = z(rng);
        const Vector x = mean + l * e;
        if ((x.array() >= lo.array()).all() && (x.array() <= hi.array()).all()) {
            out.row(r++) = x.transpose();
        }
    }
    return out;
}

struct Moments {
    Vector mean;
    Matrix cov;
    Vector mean_se;
    Matrix cov_se;
};

Moments moments(const Matrix& s) {
    const auto n = static_cast<double>(s.rows());
    Moments m;
    m.mean = s.colwise().mean().transpose();
    const Matrix c = s.rowwise() - m.mean.transpose();
    m.cov = c.transpose() * c / n;
    m.mean_se = (m.cov.diagonal() / n).cwiseSqrt();
    const Index d = s.cols();
    m.cov_se.resize(d, d);
    for (Index i = 0; i < d; ++i) {
        for (Index j = 0; j < d; ++j) {
            const Vector prod = c.col(i).cwiseProduct(c.col(j));
            const double var = (prod.array() - m.cov(i, j)).square().sum() / n;
            m.cov_se(i, j) = std::sqrt(var / n);
        }
    }
    return m;
}

void check_against_oracle(const Matrix& got, const Matrix& oracle, double n_se) {
    const Moments a = moments(got);
    const Moments b = moments(oracle);
    for (Index i = 0; i < a.mean.size(); ++i) {
        const double se = std::hypot(a.mean_se(i), b.mean_se(i));
        CHECK(std::abs(a.mean(i) - b.mean(i)) <= n_se * se);
        for (Index j = 0; j <= i; ++j) {
            const double cse = std::hypot(a.cov_se(i, j), b.cov_se(i, j));
            CHECK(std::abs(a.cov(i, j) - b.cov(i, j)) <= n_se * cse);
        }
    }
}

}  // namespace

TEST_CASE("half-normal mean") {
    const TmvnResult r = sample_tmvn(Vector::Zero(1), Matrix::Identity(1, 1), Vector::Zero(1), Vector::Constant(1, kInf),
                                     100000, 7);
    CHECK(std::abs(r.draws.mean() - std::sqrt(2.0 / 3.141592653589793)) <= 0.01);
    CHECK((r.draws.array() >= 0.0).all());
}

TEST_CASE("no truncation reproduces the Gaussian moments") {
    Matrix cov(3, 3);
    cov << 2.0, 0.6, -0.3, 0.6, 1.0, 0.2, -0.3, 0.2, 0.5;
    const Vector mean = (Vector(3) << 1.0, -2.0, 0.5).finished();
    const TmvnResult r = sample_tmvn(mean, cov, Vector::Constant(3, -kInf), Vector::Constant(3, kInf), 50000, 3);
    const Moments m = moments(r.draws);
    for (Index i = 0; i < 3; ++i) {
        CHECK(std::abs(m.mean(i) - mean(i)) <= 4.0 * m.mean_se(i));
        for (Index j = 0; j < 3; ++j) {
            CHECK(std::abs(m.cov(i, j) - cov(i, j)) <= 4.0 * m.cov_se(i, j));
        }
    }
    CHECK(std::abs(r.log_prob) <= 1e-9);
}

TEST_CASE("positive orthant with correlation 0.5 matches naive rejection") {
    Matrix cov(2, 2);
    cov << 1.0, 0.5, 0.5, 1.0;
    const Vector mean = Vector::Zero(2);
    const Vector lo = Vector::Zero(2);
    const Vector hi = Vector::Constant(2, kInf);
    const TmvnResult r = sample_tmvn(mean, cov, lo, hi, 100000, 21);
    CHECK_FALSE(r.used_gibbs);
    // P(X1 > 0, X2 > 0) = 1/4 + asin(0.5) / (2 pi) = 1/3.
    CHECK(std::exp(r.log_prob) == doctest::Approx(1.0 / 3.0).epsilon(0.02));
    check_against_oracle(r.draws, naive_rejection(mean, cov, lo, hi, 100000, 22), 3.0);
}

TEST_CASE("forced Gibbs matches naive rejection") {
    Matrix cov(2, 2);
    cov << 1.0, 0.5, 0.5, 2.0;
    const Vector mean = (Vector(2) << 0.3, -0.2).finished();
    const Vector lo = (Vector(2) << 0.0, -1.0).finished();
    const Vector hi = (Vector(2) << kInf, 1.5).finished();
    const TmvnResult r = sample_tmvn(mean, cov, lo, hi, 100000, 5, TmvnMethod::Gibbs);
    CHECK(r.used_gibbs);
    check_against_oracle(r.draws, naive_rejection(mean, cov, lo, hi, 100000, 6), 4.0);
}

TEST_CASE("five-dimensional equicorrelated orthant matches naive rejection") {
    const Index d = 5;
    Matrix cov = Matrix::Constant(d, d, 0.3);
    cov.diagonal().setOnes();
    const Vector mean = Vector::LinSpaced(d, -0.5, 0.5);
    const Vector lo = Vector::Zero(d);
    const Vector hi = Vector::Constant(d, kInf);
    const TmvnResult r = sample_tmvn(mean, cov, lo, hi, 40000, 8);
    check_against_oracle(r.draws, naive_rejection(mean, cov, lo, hi, 40000, 9), 4.0);
}

TEST_CASE("draws lie inside random boxes") {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int rep = 0; rep < 20; ++rep) {
        const Index d = 2 + rep % 9;
        Matrix a(d, d);
        for (Index i = 0; i < d; ++i)
            for (Index j = 0; j < d; ++j) a(i, j) = u(rng);
        const Matrix cov = a * a.transpose() + 0.1 * Matrix::Identity(d, d);
        Vector mean(d), lo(d), hi(d);
        for (Index i = 0; i < d; ++i) {
            mean(i) = u(rng);
            switch ((rep + i) % 3) {
                case 0: lo(i) = 0.0; hi(i) = kInf; break;
                case 1: lo(i) = -kInf; hi(i) = 0.0; break;
                default: lo(i) = -0.5; hi(i) = 1.0; break;
            }
        }
        const TmvnResult r = sample_tmvn(mean, cov, lo, hi, 500, static_cast<std::uint64_t>(rep));
        for (Index row = 0; row < r.draws.rows(); ++row) {
            CHECK((r.draws.row(row).transpose().array() >= lo.array()).all());
            CHECK((r.draws.row(row).transpose().array() <= hi.array()).all());
        }
        CHECK(r.acceptance_rate > 0.0);
        CHECK(r.acceptance_rate <= 1.0);
    }
}

TEST_CASE("sampling is deterministic given the seed") {
    Matrix cov(2, 2);
    cov << 1.0, 0.9, 0.9, 1.0;
    const Vector lo = Vector::Zero(2);
    const Vector hi = Vector::Constant(2, kInf);
    const TmvnResult a = sample_tmvn(Vector::Zero(2), cov, lo, hi, 100, 4);
    const TmvnResult b = sample_tmvn(Vector::Zero(2), cov, lo, hi, 100, 4);
    CHECK(a.draws == b.draws);
}

TEST_CASE("infeasible box names the tightest coordinate") {
    const Vector lo = (Vector(2) << 0.0, 40.0).finished();
    const Vector hi = (Vector(2) << kInf, 41.0).finished();
    try {
        sample_tmvn(Vector::Zero(2), Matrix::Identity(2, 2), lo, hi, 10, 1);
        FAIL("expected InfeasibleBox");
    } catch (const InfeasibleBox& e) {
        CHECK(e.tightest_coordinate() == 1);
        CHECK(e.log_prob() < kInfeasibleLogProb);
    }
    CHECK_THROWS_AS(sample_tmvn(Vector::Zero(1), Matrix::Identity(1, 1), Vector::Constant(1, 40.0),
                                Vector::Constant(1, 41.0), 10, 1),
                    InfeasibleBox);
}

TEST_CASE("malformed inputs are argument errors") {
    const Vector lo = Vector::Zero(2);
    const Vector hi = Vector::Constant(2, kInf);
    CHECK_THROWS_AS(sample_tmvn(Vector::Zero(2), Matrix::Identity(3, 3), lo, hi, 1, 1), ArgumentError);
    CHECK_THROWS_AS(sample_tmvn(Vector::Zero(2), Matrix::Identity(2, 2), hi, lo, 1, 1), ArgumentError);
    CHECK_THROWS_AS(sample_tmvn(Vector::Zero(0), Matrix(0, 0), Vector(0), Vector(0), 1, 1), ArgumentError);
}
