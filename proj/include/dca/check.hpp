#pragma once

#include <string>
#include <vector>

#include "dca/tensor.hpp"

namespace dca {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

// Named invariant checkers, reusable in isolation.
bool mask_range_ok(const Tensor<float>& mask);

// level "fast": invariants only; "full" adds gradient checks, oracle
// conformance sweeps, and an ordering smoke run. Prints one line per check;
// returns the number of failures.
std::vector<CheckResult> run_check_suite(const std::string& level);
int print_check_results(const std::vector<CheckResult>& results);

}  // namespace dca
