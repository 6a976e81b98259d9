#include "shapebo/bo_loop.hpp"

#include <doctest.h>

#include <cmath>
#include <stdexcept>

using namespace shapebo;

namespace {

Box unit_box(Index d) { return Box{Vector::Zero(d), Vector::Ones(d)}; }

BoOptions quick(std::size_t iterations, std::uint64_t seed) {
    BoOptions o;
    o.init_count = 4;
    o.iterations = iterations;
    o.chain_len = 1500;
    o.burn_in = 500;
    o.mc_samples = 100;
    o.max_tries = 2000;
    o.candidate_count = 64;
    o.seed = seed;
    return o;
}

double quad(const Vector& x, std::uint64_t) { return std::pow(x(0) - 0.3, 2); }

bool same_rows(const RunRecord& a, const RunRecord& b) {
    return a.iteration == b.iteration && a.queried_point == b.queried_point && a.observed_y == b.observed_y;
}

}  // namespace

TEST_CASE("one iteration evaluates init_count + 1 points") {
    int calls = 0;
    const Objective f = [&](const Vector& x, std::uint64_t s) {
        ++calls;
        return quad(x, s);
    };
    const auto trace = bo_run(f, unit_box(1), ConstraintSpec::unconstrained(1), quick(1, 3));
    CHECK(trace.size() == 5);
    CHECK(calls == 5);
    for (std::size_t i = 0; i < trace.size(); ++i) {
        CHECK(trace[i].iteration == i);
        CHECK(trace[i].incumbent.has_value() == (i >= 3));
    }
    const Incumbent& inc = *trace.back().incumbent;
    bool observed = false;
    for (const auto& r : trace) observed = observed || r.queried_point == inc.point;
    CHECK(observed);
    CHECK(inc.lower95 <= inc.posterior_expected_value);
    CHECK(inc.upper95 >= inc.posterior_expected_value);
}

TEST_CASE("runs are deterministic given the seed") {
    ConstraintSpec spec{{Shape::Convex}, 20, {}};
    const auto a = bo_run(quad, unit_box(1), spec, quick(3, 11));
    const auto b = bo_run(quad, unit_box(1), spec, quick(3, 11));
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(same_rows(a[i], b[i]));
        CHECK(a[i].incumbent.has_value() == b[i].incumbent.has_value());
        if (a[i].incumbent) {
            CHECK(a[i].incumbent->posterior_expected_value == b[i].incumbent->posterior_expected_value);
        }
    }
    const auto c = bo_run(quad, unit_box(1), spec, quick(3, 12));
    CHECK_FALSE(same_rows(a[0], c[0]));
}

TEST_CASE("constrained and unconstrained runs share the seeded prefix") {
    const Box box{Vector::Constant(2, -10.0), Vector::Constant(2, 10.0)};
    const Objective f = [](const Vector& x, std::uint64_t s) {
        return std::log1p(std::pow(x(0) - 1.5, 2)) + std::log1p(std::pow(x(1) + 2, 2)) + 1e-3 * static_cast<double>(s % 7);
    };
    ConstraintSpec qc{{Shape::Quasiconvex, Shape::Quasiconvex}, 20, {}};
    const auto a = bo_run(f, box, ConstraintSpec::unconstrained(2), quick(2, 5));
    const auto b = bo_run(f, box, qc, quick(2, 5));
    for (std::size_t i = 0; i < 4; ++i) CHECK(same_rows(a[i], b[i]));
    // Hyperparameters are fitted before any constrained sampling.
    CHECK(a[3].hyperparams->signal_var_tau2 == b[3].hyperparams->signal_var_tau2);
    CHECK(b[3].acceptance_rate.has_value());
}

TEST_CASE("an objective failure aborts with the completed rows") {
    int calls = 0;
    const Objective f = [&](const Vector& x, std::uint64_t s) {
        if (++calls == 6) throw std::runtime_error("simulator crashed");
        return quad(x, s);
    };
    try {
        bo_run(f, unit_box(1), ConstraintSpec::unconstrained(1), quick(5, 2));
        FAIL("expected BoAborted");
    } catch (const BoAborted& e) {
        CHECK(e.trace().size() == 5);
        CHECK(std::string(e.what()).find("simulator crashed") != std::string::npos);
    }
    const Objective nan = [](const Vector&, std::uint64_t) { return std::nan(""); };
    CHECK_THROWS_AS(bo_run(nan, unit_box(1), ConstraintSpec::unconstrained(1), quick(1, 2)), BoAborted);
}

TEST_CASE("invalid arguments") {
    CHECK_THROWS_AS(bo_run(quad, unit_box(1), ConstraintSpec::unconstrained(2), quick(1, 1)), ArgumentError);
    BoOptions o = quick(0, 1);
    CHECK_THROWS_AS(bo_run(quad, unit_box(1), ConstraintSpec::unconstrained(1), o), ArgumentError);
    o = quick(1, 1);
    o.init_count = 1;
    CHECK_THROWS_AS(bo_run(quad, unit_box(1), ConstraintSpec::unconstrained(1), o), ArgumentError);
}

TEST_CASE("integer lattice candidates") {
    const Matrix c = integer_candidates(Box{(Vector(2) << 1.0, 0.0).finished(), (Vector(2) << 3.0, 1.0).finished()});
    const Matrix expect = (Matrix(6, 2) << 1, 0, 2, 0, 3, 0, 1, 1, 2, 1, 3, 1).finished();
    CHECK(c == expect);
    CHECK(integer_candidates(Box{Vector::Constant(1, 0.5), Vector::Constant(1, 2.5)}).rows() == 2);
    CHECK_THROWS_AS(integer_candidates(Box{Vector::Constant(1, 0.2), Vector::Constant(1, 0.8)}), ArgumentError);
}

TEST_CASE("integer domains query lattice points only") {
    BoOptions o = quick(3, 4);
    o.integer_domain = true;
    const Box box{Vector::Constant(1, 1.0), Vector::Constant(1, 40.0)};
    const Objective f = [](const Vector& x, std::uint64_t) { return std::pow(x(0) - 17.0, 2) / 100.0; };
    const auto trace = bo_run(f, box, ConstraintSpec{{Shape::Convex}, 20, {}}, o);
    for (const auto& r : trace) {
        CHECK(r.queried_point(0) == std::round(r.queried_point(0)));
        CHECK(r.queried_point(0) >= 1.0);
        CHECK(r.queried_point(0) <= 40.0);
    }
}
