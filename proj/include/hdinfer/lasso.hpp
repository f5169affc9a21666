#pragma once

#include <optional>
#include <utility>

#include "hdinfer/random.hpp"
#include "hdinfer/types.hpp"

namespace hdinfer {

struct LassoOptions {
  // convergence: duality gap <= gap_tol_factor * ||y||_2^2
  double gap_tol_factor = 1e-7;
  int max_sweeps = 100000;
  // A descending-grid sweep stops early (remaining grid values reuse the
  // last fit) once the fit is effectively saturated:
  //   - ||r||^2 dropped below path_stop_ratio * ||y||^2, or
  //   - the improvement over the previous grid point fell below
  //     path_min_improvement * ||y||^2, or
  //   - the active set reached path_support_cap * n.
  double path_stop_ratio = 1e-5;
  double path_min_improvement = 1e-5;
  double path_support_cap = 0.95;
};

/// L1-penalized least squares,
///     min_beta  (2n)^-1 ||y - X beta||_2^2 + lambda ||beta||_1,
/// solved by cyclic coordinate descent with an active-set strategy.
/// Deterministic given inputs; throws ConvergenceError (carrying the last
/// duality gap) if the gap tolerance is not reached within max_sweeps.
CoefficientEstimate lasso_coordinate_descent(
    const Dataset& data, double lambda,
    const CoefficientEstimate* warm_start = nullptr,
    const LassoOptions& opts = {});

/// Smallest penalty with an all-zero solution: max_j |X_j^T y| / n.
double lambda_max(const Dataset& data);

/// Log-spaced grid of `size` values from lmax down to lmax * ratio.
Vector lambda_grid(double lmax, int size, double ratio);

/// Fits along a descending penalty grid with warm starts.  Grid values must
/// be descending.
std::vector<CoefficientEstimate> lasso_path(const Dataset& data, const Vector& grid,
                                            const LassoOptions& opts = {});

struct CvLassoOptions {
  int n_folds = 10;
  int grid_size = 100;
  double grid_ratio = 1e-4;
  LassoOptions solver;
};

struct CvLassoResult {
  CoefficientEstimate fit;  // refit on the full data at lambda_cv
  double lambda_cv = 0.0;
  Vector grid;
  Vector cv_mse;  // mean held-out squared error per grid value
};

/// K-fold cross-validated Lasso.  Fold assignment is drawn from `rng`, so a
/// fixed seed gives identical folds regardless of thread count.
CvLassoResult lasso_path_cv(const Dataset& data, Rng rng,
                            const CvLassoOptions& opts = {});

/// Joint (beta, sigma) estimation: alternates a Lasso fit at penalty
/// sigma * sqrt(2 log(p) / n) with sigma^2 <- ||y - X beta||^2 / n until the
/// noise scale stabilizes.  Throws DegenerateError on interpolating fits.
std::pair<CoefficientEstimate, NoiseEstimate> scaled_lasso_sigma(
    const Dataset& data, const LassoOptions& opts = {});

/// Residual-based noise scale from a CV-Lasso fit:
/// sigma^2 = ||y - X beta||^2 / (n - |support|).
NoiseEstimate cv_lasso_residual_sigma(const Dataset& data, Rng rng,
                                      const CvLassoOptions& opts = {});

NoiseEstimate estimate_noise(const Dataset& data, NoiseMethod method, Rng rng);

/// Indices of the first q variables to enter the regularization path, in
/// entry order (ties broken by column index).  May return fewer than q if the
/// path exhausts first.
std::vector<int> lasso_path_first_entrants(const Dataset& data, int q,
                                           int grid_size = 100,
                                           double grid_ratio = 1e-4);

/// Max KKT residual of a fit: for inactive coordinates the excess of
/// |X_j^T r / n| over lambda, for active ones the distance of X_j^T r / n
/// from lambda * sign(beta_j).
double kkt_violation(const Dataset& data, const CoefficientEstimate& est);

/// Penalized objective value (2n)^-1 ||y - X beta||^2 + lambda ||beta||_1.
double lasso_objective(const Dataset& data, const Vector& beta, double lambda);

}  // namespace hdinfer
