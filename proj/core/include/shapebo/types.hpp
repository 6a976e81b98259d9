#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace shapebo {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Bad shapes, out-of-range arguments, violated preconditions.
class ArgumentError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A factorization failed even after jitter escalation, or a computation
/// produced a non-finite value where one is not allowed.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Axis-aligned search box. `lower(i) < upper(i)` for every dimension.
struct Box {
    Vector lower;
    Vector upper;

    Index dim() const { return lower.size(); }

    void validate() const;

    /// Maps a point of the box to the unit cube.
    Vector to_unit(const Vector& x) const;
    /// Maps a unit-cube point back to the box.
    Vector from_unit(const Vector& u) const;

    bool contains(const Vector& x, double slack = 0.0) const;
};

/// Deterministic sub-stream seed for a (base seed, purpose tag, index) triple.
/// Uses the splitmix64 finalizer so nearby inputs decorrelate.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag, std::uint64_t index = 0);

}  // namespace shapebo
