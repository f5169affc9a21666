#pragma once

#include <optional>

#include "hdinfer/lasso.hpp"
#include "hdinfer/max_statistic.hpp"
#include "hdinfer/multiple_testing.hpp"
#include "hdinfer/types.hpp"

namespace hdinfer {

/// Pieces of the projected Ridge estimator on standardized data:
///   beta_ridge = (Sigma_hat + lambda I)^-1 X'y / n,
///   p_r        = X'(X X')^- X   (projector onto the row space of X),
///   omega_r    = (Sigma_hat + lambda I)^-1 Sigma_hat (Sigma_hat + lambda I)^-1 / n,
/// assembled from one SVD; singular values below 1e-10 of the largest count
/// as zero for the generalized inverse.
struct RidgeProjectionComponents {
  Vector beta_ridge;  // for the response the components were built with
  Matrix p_r;
  Matrix omega_r;
  double lambda_ridge = 0.0;
  double xi = 0.05;
  Vector delta_bound;  // max_{k != j} |P_jk / P_jj| * (log(p)/n)^(1/2 - xi)
  std::vector<bool> defined;  // false when |P_jj| < 1e-8
  int rank = 0;
  // SVD factors; ridge_inference recomputes the estimator from these, so one
  // set of components serves many responses on the same design
  Matrix svd_u;  // n x rank
  Matrix svd_v;  // p x rank
  Vector shrink; // d_i / (d_i^2 + n lambda)
};

/// lambda_ridge <= 0 selects the default 1/n.  xi must lie in (0, 0.5).
RidgeProjectionComponents ridge_components(const Dataset& data,
                                           double lambda_ridge = -1.0,
                                           double xi = 0.05);

struct RidgeOptions {
  double lambda_ridge = -1.0;
  double xi = 0.05;
  double alpha = 0.05;
  double level = 0.95;
  Adjustment adjustment = Adjustment::Holm;
  std::optional<double> correction_lambda;  // fixed penalty for the bias fit
  CvLassoOptions cv;
  int threads = 0;
};

struct RidgeResult {
  Vector b_r;  // bias-corrected estimator, standardized scale
  Vector p_raw;
  Vector p_adjusted;
  std::vector<bool> defined;
  NoiseEstimate noise;
  CoefficientEstimate beta_correction;
  InferenceResult report;  // original-scale summary
};

/// Bias correction b_r;j = beta_ridge;j / P_jj - sum_{k != j} (P_jk/P_jj) beta_k
/// with the worst-case projection-bias inflation:
///   p_raw[j] = 2 (1 - Phi( (|b_r;j| - sigma * Delta_j)_+ |P_jj| / (sigma sqrt(omega_jj)) )),
///   CI half-width = sigma * Delta_j + sigma sqrt(omega_jj) / |P_jj| * z_{1-a/2}.
/// The Delta term rides on the noise scale so that rescaling y leaves
/// p-values unchanged.
RidgeResult ridge_inference(const Dataset& data,
                            const RidgeProjectionComponents& comps,
                            const NoiseEstimate& sigma, std::uint64_t seed,
                            const RidgeOptions& opts = {});

/// Monte-Carlo group test against draws of
///   max_j ( omega_jj^{-1/2} |W_j| / |P_jj| + sigma^-1 omega_jj^{-1/2} * sigma * Delta_j ),
/// W ~ N(0, Omega_GG).
GroupTestOutcome ridge_group_test(const RidgeProjectionComponents& comps,
                                  const RidgeResult& result,
                                  const std::vector<int>& group, int n_mc,
                                  std::uint64_t seed, int threads = 0);

/// Whole pipeline: components, noise scale (scaled Lasso unless overridden),
/// inference.
RidgeResult ridge_projection(const Dataset& data, std::uint64_t seed,
                             const RidgeOptions& opts = {},
                             std::optional<NoiseEstimate> noise = std::nullopt);

}  // namespace hdinfer
