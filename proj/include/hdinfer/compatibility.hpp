#pragma once

#include <vector>

#include "hdinfer/random.hpp"
#include "hdinfer/types.hpp"

namespace hdinfer {

/// Randomized search over the cone ||beta_Sc||_1 <= 3 ||beta_S||_1 for the
/// smallest value of  s0 * beta' Sigma_hat beta / ||beta_S||_1^2.
/// The result is an upper bound on the true cone minimum (a finite random
/// search can only overshoot), hence `heuristic` is always set.
struct CompatibilityDiagnostic {
  double phi0_sq = 0.0;
  bool heuristic = true;
  int n_draws = 0;
};

CompatibilityDiagnostic compatibility_diagnostic(const Dataset& data,
                                                 const std::vector<int>& support,
                                                 int n_draws, Rng rng);

}  // namespace hdinfer
