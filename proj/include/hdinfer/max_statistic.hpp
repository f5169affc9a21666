#pragma once

#include <vector>

#include "hdinfer/types.hpp"

namespace hdinfer {

/// Factor A with A A' equal to the (symmetrized) covariance.  When the
/// matrix is indefinite in finite samples, negative eigenvalues are clipped
/// at zero and `repaired` is set.
struct GaussianMaxSampler {
  Matrix factor;
  Vector diagonal;  // diagonal of the (possibly repaired) covariance
  bool repaired = false;
};

GaussianMaxSampler factor_covariance(const Matrix& cov);

/// Monte-Carlo exceedance p-value for an observed max statistic against
/// draws of  max_j ( scale_j |W_j| + offset_j ),  W ~ N(0, cov), including
/// the finite-sample (1 + hits) / (1 + n_mc) correction.  Draws are chunked
/// with counter-derived streams, so the result does not depend on the
/// thread count.
double mc_max_exceedance_pvalue(const GaussianMaxSampler& sampler,
                                const Vector& scale, const Vector& offset,
                                double observed, int n_mc, std::uint64_t seed,
                                int threads = 0);

struct GroupTestOutcome {
  double p_value = 1.0;
  bool covariance_repaired = false;  // negative eigenvalues were clipped
  std::vector<int> dropped;          // degenerate members excluded from the max
};

}  // namespace hdinfer
