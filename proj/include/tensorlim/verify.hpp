#pragma once

#include <string>
#include <vector>

namespace tensorlim {

struct PropertyResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

// The invariant suite behind `tensorlim verify`: linear-algebra kernels,
// channel convexity/monotonicity/capacity, the lifting identity, an I-MMSE
// finite-difference check, stepping idempotence, and the assignment
// information identity.
std::vector<PropertyResult> run_verification(uint64_t seed = 1);

}  // namespace tensorlim
