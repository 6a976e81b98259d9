#include "shapebo/design.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

using namespace shapebo;

TEST_CASE("single-point design") {
    const LhsDesign x = maximin_lhs(1, 3, 5);
    REQUIRE(x.points.rows() == 1);
    CHECK((x.points.array() >= 0.0).all());
    CHECK((x.points.array() <= 1.0).all());
    CHECK(std::isinf(x.min_distance));
}

TEST_CASE("every column hits every bin exactly once") {
    for (Index n : {2, 7, 50, 100}) {
        for (Index d : {1, 2, 4}) {
            const LhsDesign x = maximin_lhs(n, d, static_cast<std::uint64_t>(n * 10 + d));
            for (Index j = 0; j < d; ++j) {
                std::vector<Index> bins;
                for (Index i = 0; i < n; ++i) {
                    bins.push_back(static_cast<Index>(std::floor(x.points(i, j) * static_cast<double>(n))));
                }
                std::sort(bins.begin(), bins.end());
                for (Index i = 0; i < n; ++i) {
                    CHECK(bins[static_cast<std::size_t>(i)] == i);
                }
            }
        }
    }
}

TEST_CASE("reported distance is the design's minimum pairwise distance") {
    const LhsDesign x = maximin_lhs(20, 2, 3, 5);
    CHECK(x.min_distance == min_pairwise_distance(x.points));
}

TEST_CASE("maximin distance is monotone in the number of restarts") {
    double prev = 0.0;
    for (int r = 1; r <= 30; ++r) {
        const double dist = maximin_lhs(15, 2, 99, r).min_distance;
        CHECK(dist >= prev);
        prev = dist;
    }
}

TEST_CASE("designs are deterministic given the seed") {
    CHECK(maximin_lhs(10, 3, 4).points == maximin_lhs(10, 3, 4).points);
    CHECK(maximin_lhs(10, 3, 4).points != maximin_lhs(10, 3, 5).points);
}

TEST_CASE("degenerate sizes are rejected") {
    CHECK_THROWS_AS(maximin_lhs(0, 2, 1), ArgumentError);
    CHECK_THROWS_AS(maximin_lhs(3, 0, 1), ArgumentError);
    CHECK_THROWS_AS(maximin_lhs(3, 2, 1, 0), ArgumentError);
}
