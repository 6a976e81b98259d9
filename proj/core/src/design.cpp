#include "shapebo/design.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

namespace shapebo {

double min_pairwise_distance(const Matrix& points) {
    double best = std::numeric_limits<double>::infinity();
    for (Index i = 0; i < points.rows(); ++i) {
        for (Index j = i + 1; j < points.rows(); ++j) {
            best = std::min(best, (points.row(i) - points.row(j)).squaredNorm());
        }
    }
    return std::sqrt(best);
}

LhsDesign maximin_lhs(Index n, Index d, std::uint64_t seed, int restarts) {
    if (n < 1 || d < 1) {
        throw ArgumentError("maximin_lhs needs n >= 1 and d >= 1");
    }
    if (restarts < 1) {
        throw ArgumentError("maximin_lhs needs at least one restart");
    }
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<Index> bins(static_cast<std::size_t>(n));

    LhsDesign best;
    best.min_distance = -1.0;
    Matrix candidate(n, d);
    for (int r = 0; r < restarts; ++r) {
        for (Index j = 0; j < d; ++j) {
            std::iota(bins.begin(), bins.end(), Index{0});
            std::shuffle(bins.begin(), bins.end(), rng);
            for (Index i = 0; i < n; ++i) {
                const double offset = unif(rng);
                candidate(i, j) = (static_cast<double>(bins[static_cast<std::size_t>(i)]) + offset) /
                                  static_cast<double>(n);
            }
        }
        const double dist = min_pairwise_distance(candidate);
        if (dist > best.min_distance) {
            best.points = candidate;
            best.min_distance = dist;
        }
    }
    return best;
}

}  // namespace shapebo
