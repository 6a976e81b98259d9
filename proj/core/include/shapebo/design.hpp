#pragma once

#include "shapebo/types.hpp"

#include <cstdint>

namespace shapebo {

struct LhsDesign {
    /// n x d, entries in [0, 1].
    Matrix points;
    /// Minimum pairwise Euclidean distance (infinity for n = 1).
    double min_distance = 0.0;
};

/// Latin hypercube in [0,1]^d: every column has exactly one point in each of
/// the n equal-width bins, positioned uniformly within its bin. Among
/// `restarts` independent draws the one with the largest minimum pairwise
/// distance is returned; the first strictly better draw wins ties.
LhsDesign maximin_lhs(Index n, Index d, std::uint64_t seed, int restarts = 20);

/// Minimum pairwise distance between the rows of `points`.
double min_pairwise_distance(const Matrix& points);

}  // namespace shapebo
