#pragma once

#include <functional>

#include "hdinfer/random.hpp"
#include "hdinfer/types.hpp"

namespace hdinfer {

struct StabilityResult {
  std::vector<int> select;  // sorted stable set
  Vector freq;              // selection frequency per variable
  int q = 0;                // per-subsample selection size
  double pi_thr = 0.75;
  double ev_target = 1.0;
};

/// Receives one half-subsample (raw rows) and a budget q; must return at
/// most q distinct indices (the first q to enter its selection path).
using SubsetSelector =
    std::function<std::vector<int>(const Dataset& subsample, int q, Rng rng)>;

/// First q entrants of the Lasso path on the (leniently standardized)
/// subsample.
SubsetSelector lasso_path_selector();

/// Subsample-frequency selection controlling the expected number of false
/// positives: q is calibrated from the bound  E[V] <= q^2 / ((2 pi_thr - 1) p),
/// i.e. q = floor(sqrt(ev_target (2 pi_thr - 1) p)).
StabilityResult stability_select(const Dataset& data, double ev_target,
                                 double pi_thr = 0.75, int n_subsamples = 100,
                                 SubsetSelector selector = {},
                                 std::uint64_t seed = 0, int threads = 0);

}  // namespace hdinfer
