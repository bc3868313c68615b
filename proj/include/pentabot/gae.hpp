#pragma once

#include <vector>

namespace pentabot::agents {

struct GaeResult {
  std::vector<double> advantages;
  std::vector<double> returns;  // advantages + values
};

/// GAE(lambda). `values` has one more entry than `rewards` (the bootstrap
/// value after the last step). terminals[t] = true cuts the recursion after
/// step t and drops the bootstrap value of t + 1.
GaeResult gae_advantages(const std::vector<double>& rewards, const std::vector<double>& values,
                         const std::vector<bool>& terminals, double gamma, double lambda);

}  // namespace pentabot::agents
