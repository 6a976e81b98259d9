#pragma once

#include <iosfwd>

namespace shapebo {

/// Fast invariant checks; prints one PASS/FAIL line per check. Returns 0 when
/// all pass, 2 otherwise.
int run_selftest(std::ostream& out);

}  // namespace shapebo
