#pragma once

#include <optional>

#include "hdinfer/lasso.hpp"
#include "hdinfer/max_statistic.hpp"
#include "hdinfer/multiple_testing.hpp"
#include "hdinfer/random.hpp"
#include "hdinfer/types.hpp"

namespace hdinfer {

enum class NodewiseTuning { Cv, Zz, FixedLambda };

// FixedLambda doubles as the hook for alternative residual constructions
// (e.g. square-root-Lasso style tuning): compute the penalty externally and
// pass it through.
struct NodewiseOptions {
  NodewiseTuning tuning = NodewiseTuning::Zz;
  double fixed_lambda = 0.0;  // only with FixedLambda
  CvLassoOptions cv;
  int threads = 0;
};

/// Residuals of the per-column regularized projections.  `lambda_j` is
/// reported in the 1/n objective convention (twice the solver's penalty), so
/// the residuals satisfy  max_{k != j} 2 |X_k' Z_j / n| <= lambda_j.
struct NodewiseComponents {
  Matrix z;        // n x p residual vectors
  Vector lambda_j; // length p
  Matrix proj;     // proj(j,k) = X_k' Z_j / (X_j' Z_j), diagonal fixed at 1
  Matrix omega;    // omega(j,k) = n Z_j'Z_k / (denom_j denom_k)
  Vector denom;    // X_j' Z_j
  std::vector<bool> degenerate;  // projection collapsed for this variable
  NodewiseTuning tuning = NodewiseTuning::Zz;
};

/// Column-wise Lasso of X_j on the remaining columns.  Tuning `Cv` picks
/// lambda_j by 10-fold cross-validation; `Zz` (default) takes the CV
/// residuals, inflates their variance proxy by 25% and then walks the grid
/// (extended one decade below the CV grid) down to the smallest lambda_j
/// whose residual variance stays under that cap.
NodewiseComponents nodewise_lasso(const Dataset& data, const NodewiseOptions& opts,
                                  std::uint64_t seed);

/// Worst KKT residual of the stored nodewise solutions:
/// max_j max_{k != j} ( 2 |X_k' Z_j / n| - lambda_j ).
double nodewise_kkt_violation(const Dataset& data, const NodewiseComponents& comps);

struct DesparsOptions {
  double alpha = 0.05;
  double level = 0.95;
  Adjustment adjustment = Adjustment::Holm;
  // fixed penalty for the bias-correction fit instead of CV (used to study
  // the vanishing-regularization limit)
  std::optional<double> correction_lambda;
  CvLassoOptions cv;
  int threads = 0;
};

struct DesparsifiedResult {
  Vector b;   // bias-corrected estimator, standardized scale
  Vector se;  // sigma * sqrt(omega_jj / n), standardized scale
  Vector p_raw;
  Vector p_adjusted;
  // 2 sqrt(n) lambda_j err1 / (denom_j / n), where err1 is the l1 distance
  // between the correction fit and its unpenalized refit on the support
  Vector bias_error_diagnostic;
  // set when the sharp bound max_{k != j} |P_jk| * err1 exceeds se_j
  std::vector<bool> bias_flag;
  std::vector<bool> defined;
  NoiseEstimate noise;
  CoefficientEstimate beta_correction;  // Lasso fit used in the correction
  InferenceResult report;               // original-scale summary
};

/// Bias-corrected estimator b_j = Y'Z_j / X_j'Z_j - sum_{k != j} P_jk beta_k
/// with Gaussian per-variable p-values and Holm adjustment by default.
DesparsifiedResult desparsified_inference(const Dataset& data,
                                          const NodewiseComponents& comps,
                                          const NoiseEstimate& sigma,
                                          std::uint64_t seed,
                                          const DesparsOptions& opts = {});

/// Monte-Carlo p-value for H0: beta_j = 0 for all j in `group`, based on the
/// max of |b_j| / se_j against draws of max_j omega_jj^{-1/2} |W_j| with
/// W ~ N(0, Omega_GG).  Includes the finite-sample +1 correction.
GroupTestOutcome despars_group_test(const DesparsifiedResult& result,
                                    const NodewiseComponents& comps,
                                    const std::vector<int>& group, int n_mc,
                                    std::uint64_t seed, int threads = 0);

/// Whole pipeline with the default choices: nodewise projections, noise
/// scale (scaled Lasso unless overridden), inference.
DesparsifiedResult lasso_projection(const Dataset& data, std::uint64_t seed,
                                    const NodewiseOptions& nodewise_opts = {},
                                    const DesparsOptions& opts = {},
                                    std::optional<NoiseEstimate> noise = std::nullopt);

}  // namespace hdinfer
