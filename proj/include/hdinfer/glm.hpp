#pragma once

#include <optional>
#include <string>

#include "hdinfer/desparsified_lasso.hpp"
#include "hdinfer/multi_split.hpp"
#include "hdinfer/ridge_projection.hpp"
#include "hdinfer/types.hpp"

namespace hdinfer {

enum class Family { Gaussian, Binomial, Poisson };

Family family_from_string(const std::string& name);
std::string to_string(Family f);

/// Link and variance functions of the exponential families supported by the
/// weighted reduction.  `weight(z)` is the IRLS weight 1 / (g'(z)^2 V(z)).
struct GlmSpec {
  Family family = Family::Gaussian;

  double link(double mean) const;
  double inverse_link(double eta) const;
  double dlink(double z) const;     // dg/dz
  double variance(double z) const;  // V(z)
  double weight(double z) const;

  static GlmSpec make(Family f) { return GlmSpec{f}; }
};

struct GlmFit {
  CoefficientEstimate coef;  // original x scale, intercept filled in
  Vector fitted_mean;        // z_hat (pi_hat for binomial)
  Family family = Family::Gaussian;
  double lambda_std = 0.0;   // penalty on the standardized-column scale
  bool converged = true;
  int weight_clamps = 0;
  std::vector<std::string> warnings;
};

struct GlmFitOptions {
  std::optional<double> lambda;  // standardized-scale penalty; unset -> CV
  CvLassoOptions cv;
  int max_irls_iters = 50;
  double deviance_tol = 1e-8;
};

/// l1-penalized GLM fit: IRLS outer loop around a penalized weighted
/// least-squares coordinate descent.  Binomial responses must be 0/1,
/// Poisson responses nonnegative integers.  On separation the last iterate
/// is returned with `converged` unset and a warning attached.
GlmFit l1_glm_fit(const Dataset& data, const GlmSpec& spec, Rng rng,
                  const GlmFitOptions& opts = {});

/// The weighted least-squares problem anchored at an l1 fit:
///   y_adj = eta_hat + (y - z_hat) g'(z_hat),   W^-1 = g'(z)^2 V(z),
///   y_w = sqrt(W) y_adj,  x_w = sqrt(W) X.
/// Weights are clamped below at 1e-10 (counted, never dropped).
struct WeightedProblem {
  Vector y_w;
  Matrix x_w;
  Vector weights;
  Vector y_adj;
  Vector fitted_mean;
  CoefficientEstimate beta_init;
  int n_clamped = 0;
};

WeightedProblem build_weighted_problem(const Dataset& data, const GlmSpec& spec,
                                       const GlmFit& fit);

struct GlmInferenceOptions {
  GlmFitOptions fit;
  double alpha = 0.05;
  double level = 0.95;
  NodewiseOptions nodewise;
  DesparsOptions despars;
  RidgeOptions ridge;
  AggregationConfig msplit;
  int threads = 0;
};

/// Runs a linear-model engine ("ridge-proj", "lasso-proj" or "multi-split")
/// on the weighted problem with the noise scale pinned at 1.
InferenceResult glm_inference(const Dataset& data, const GlmSpec& spec,
                              const std::string& method, std::uint64_t seed,
                              const GlmInferenceOptions& opts = {});

}  // namespace hdinfer
