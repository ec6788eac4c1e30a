#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace lift3d {

struct GradientSuiteResult {
  std::string name;
  int trials = 0;
  double max_rel_error = 0.0;
  bool passed = false;
};

struct SelftestReport {
  double tolerance = 1e-5;
  double seconds = 0.0;
  std::vector<GradientSuiteResult> suites;

  bool passed() const;
  std::string to_json() const;
};

// Finite-difference checks of every analytic gradient in loss_math on random
// non-degenerate inputs: chamfer (w.r.t. A), ambiguity (w.r.t. logits),
// classify (w.r.t. v and logits), assembled cuboid (w.r.t. all 13 raw
// parameters) and chamfer composed with the cuboid.
SelftestReport run_gradient_selftest(int trials = 100, uint64_t seed = 7,
                                     double tolerance = 1e-5);

}  // namespace lift3d
