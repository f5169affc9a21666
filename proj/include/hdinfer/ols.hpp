#pragma once

#include "hdinfer/types.hpp"

namespace hdinfer {

/// Classical least-squares summary for a low-dimensional design.  An
/// unpenalized intercept is always included; degrees of freedom are
/// n - p - 1.  Two-sided t-test p-values are floored at 1e-300.
struct OlsSummary {
  Vector estimate;
  Vector se;
  Vector t_stat;
  Vector p_value;
  double intercept = 0.0;
  double sigma_hat = 0.0;
  double dof = 0.0;
};

/// Throws RankError (naming the collinear columns) when [1, x_sub] is rank
/// deficient, DimensionError when there are not enough rows.
OlsSummary ols_low_dim_inference(const Matrix& x_sub, const Vector& y);

}  // namespace hdinfer
