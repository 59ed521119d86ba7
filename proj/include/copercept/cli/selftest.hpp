#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace copercept {

struct CheckOutcome {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Quick invariant suite: attention and Top-K against brute force, wire round trips and
/// corruptions, the dense bandwidth formula, the budget law and run determinism.
std::vector<CheckOutcome> run_selftest(std::uint64_t seed = 1);

}  // namespace copercept
