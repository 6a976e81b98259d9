#include "shapebo/types.hpp"

#include <cmath>

namespace shapebo {

void Box::validate() const {
    if (lower.size() == 0 || lower.size() != upper.size()) {
        throw ArgumentError("box bounds must be nonempty and of equal length");
    }
    for (Index i = 0; i < lower.size(); ++i) {
        if (!std::isfinite(lower(i)) || !std::isfinite(upper(i)) || !(lower(i) < upper(i))) {
            throw ArgumentError("box dimension " + std::to_string(i) + " needs finite lo < hi");
        }
    }
}

Vector Box::to_unit(const Vector& x) const {
    return ((x - lower).array() / (upper - lower).array()).matrix();
}

Vector Box::from_unit(const Vector& u) const {
    return (lower.array() + u.array() * (upper - lower).array()).matrix();
}

bool Box::contains(const Vector& x, double slack) const {
    if (x.size() != lower.size()) {
        return false;
    }
    return ((x.array() >= lower.array() - slack) && (x.array() <= upper.array() + slack)).all();
}

namespace {
std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}
}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag, std::uint64_t index) {
    return splitmix64(splitmix64(splitmix64(base) ^ tag) + index);
}

}  // namespace shapebo
