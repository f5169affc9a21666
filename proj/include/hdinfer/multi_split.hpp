#pragma once

#include <functional>
#include <optional>

#include "hdinfer/lasso.hpp"
#include "hdinfer/random.hpp"
#include "hdinfer/types.hpp"

namespace hdinfer {

/// Output of a screening procedure on one sample half: the selected columns
/// plus coefficient magnitudes used for truncation when the selection is
/// larger than floor(n/2).
struct ScreenResult {
  std::vector<int> selected;
  Vector coef;  // length p, magnitudes on the screener's own scale
};

/// Variable screeners are pluggable; they receive the raw rows of one half
/// and a single-use generator.
using Screener = std::function<ScreenResult(const Dataset& half, Rng rng)>;

/// Default screener: support of a cross-validated Lasso fit.  Fold count
/// adapts downward for small halves.
Screener cv_lasso_screener(CvLassoOptions opts = {});

/// One sample split: rows i1 select, rows i2 test.
struct SplitRecord {
  std::vector<int> i1, i2;    // disjoint, union = all rows, |i1| = floor(n/2)
  std::vector<int> selected;  // sorted
  Vector p_raw;               // length p, 1.0 outside `selected`
  Vector p_corr;              // min(p_raw * |selected|, 1)
  Vector estimate;            // per-split OLS estimate, NaN outside `selected`
  Vector se;                  // matching standard errors
  double dof = 0.0;
  bool truncated = false;     // selection was cut back to floor(n/2)
  bool failed = false;
  std::string failure_reason;
};

struct AggregationConfig {
  int n_splits = 100;  // typical choices are 50 or 100
  double gamma_min = 0.05;
  std::optional<double> fixed_gamma;  // plain quantile rule instead of the search
  double ci_level = 0.95;
  int max_retries = 5;
  CvLassoOptions screener_cv;
};

struct MultiSplitResult {
  Vector p_aggregated;  // FWER-adjusted, no further correction needed
  Matrix q_gamma;       // p x |gamma_grid| table of Q_j(gamma), for reporting
  Vector gamma_grid;
  Vector estimate;      // median per-split OLS estimate, NaN if never selected
  Vector ci_lower, ci_upper;
  std::vector<bool> ci_defined;
  double ci_level = 0.95;
  double gamma_min = 0.05;
  std::optional<double> fixed_gamma;
  std::vector<SplitRecord> splits;  // retained (non-failed) splits
  int n_failed = 0;
};

/// One screening/testing split with up to `max_retries` re-draws when the
/// tested submatrix is rank deficient.  A still-failing split is returned
/// with `failed` set rather than thrown.
SplitRecord single_split(const Dataset& data, const Screener& screener, Rng rng,
                         int max_retries = 5);

/// Quantile aggregation of per-split adjusted p-values (rows = splits).
/// Exact evaluation: the infimum over gamma in (gamma_min, 1) is attained at
/// the order-statistic breakpoints k/B with k > gamma_min * B.
Vector aggregate(const Matrix& p_corr, const AggregationConfig& cfg);

MultiSplitResult multi_split_inference(const Dataset& data,
                                       const AggregationConfig& cfg,
                                       const Screener& screener,
                                       std::uint64_t seed, int threads = 0);

struct CiBound {
  double lower = 0.0, upper = 0.0;
  bool defined = false;
};

/// Confidence interval by p-value inversion: c belongs to the (1-alpha)
/// interval iff for every split whose rank exceeds gamma_min the point lies
/// in that split's t-interval at level
///   1 - alpha * gamma_b / ((1 - log gamma_min) * |S_b|).
/// Endpoints are located by bisection; undefined when the variable was never
/// selected often enough to pin an interval down.
CiBound multi_split_ci(const MultiSplitResult& result, double level, int j);

InferenceResult to_inference_result(const MultiSplitResult& result, double alpha);

}  // namespace hdinfer
