#include "hdinfer/lasso.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace hdinfer {

namespace {

inline double soft_threshold(double z, double t) {
  if (z > t) return z - t;
  if (z < -t) return z + t;
  return 0.0;
}

struct Workspace {
  const Matrix& x;
  const Vector& y;
  Vector col_msq;      // ||x_j||^2 / n per column
  double n;

  explicit Workspace(const Dataset& data)
      : x(data.x), y(data.y), n(static_cast<double>(data.n())) {
    col_msq = x.colwise().squaredNorm() / n;
  }
};

// One pass over the given coordinates; returns the largest |delta beta|.
double sweep(const Workspace& w, const std::vector<int>& coords, double lambda,
             Vector& beta, Vector& r) {
  double max_change = 0.0;
  for (int j : coords) {
    double a = w.col_msq[j];
    if (a <= 0.0) continue;
    double old = beta[j];
    double z = w.x.col(j).dot(r) / w.n + a * old;
    double next = soft_threshold(z, lambda) / a;
    if (next != old) {
      r.noalias() -= w.x.col(j) * (next - old);
      beta[j] = next;
      max_change = std::max(max_change, std::fabs(next - old));
    }
  }
  return max_change;
}

// Exact minimizer over the current support with the current sign pattern:
//   beta_A = (X_A'X_A / n)^-1 (X_A'y / n - lambda * signs).
// Coordinates whose solution flips sign get dropped and the solve repeats.
// Purely an accelerator; the caller's global optimality check keeps it
// honest.  Returns false when the reduced Gram matrix is not positive
// definite (interpolating regime), leaving beta/r untouched.
bool active_set_newton(const Workspace& w, double lambda, Vector& beta, Vector& r) {
  std::vector<int> active;
  for (Index j = 0; j < beta.size(); ++j)
    if (beta[j] != 0.0) active.push_back(static_cast<int>(j));
  if (active.empty() || static_cast<Index>(active.size()) >= w.x.rows() ||
      active.size() > 240)
    return false;

  const Vector beta_in = beta;
  const Vector r_in = r;
  const double obj_in =
      r.squaredNorm() / (2.0 * w.n) + lambda * beta.lpNorm<1>();
  auto accept_or_revert = [&]() {
    double obj = r.squaredNorm() / (2.0 * w.n) + lambda * beta.lpNorm<1>();
    if (obj <= obj_in + 1e-12 * (1.0 + obj_in)) return true;
    beta = beta_in;
    r = r_in;
    return false;
  };

  std::vector<double> signs(active.size());
  for (std::size_t i = 0; i < active.size(); ++i)
    signs[i] = beta[active[i]] > 0.0 ? 1.0 : -1.0;

  for (int round = 0; round < 4; ++round) {
    const Index a = static_cast<Index>(active.size());
    Matrix xa(w.x.rows(), a);
    Vector rhs(a);
    for (Index i = 0; i < a; ++i) {
      xa.col(i) = w.x.col(active[i]);
      rhs[i] = xa.col(i).dot(w.y) / w.n - lambda * signs[i];
    }
    Matrix gram = xa.transpose() * xa / w.n;
    Eigen::LLT<Matrix> llt(gram);
    if (llt.info() != Eigen::Success) return false;
    Vector solution = llt.solve(rhs);

    std::vector<int> keep;
    std::vector<double> keep_signs;
    for (Index i = 0; i < a; ++i) {
      if (lambda > 0.0 && solution[i] * signs[i] <= 0.0) continue;  // flipped
      keep.push_back(active[i]);
      keep_signs.push_back(signs[i]);
    }
    if (static_cast<Index>(keep.size()) == a) {
      for (int j : active) beta[j] = 0.0;
      for (Index i = 0; i < a; ++i) beta[active[i]] = solution[i];
      r.noalias() = w.y - xa * solution;
      return accept_or_revert();
    }
    // drop the flipped coordinates, keep beta/r consistent, try again
    for (int j : active) beta[j] = 0.0;
    for (Index i = 0; i < a; ++i)
      if (lambda <= 0.0 || solution[i] * signs[i] > 0.0) beta[active[i]] = solution[i];
    r.noalias() = w.y - xa * solution;
    for (Index i = 0; i < a; ++i)
      if (!(lambda <= 0.0 || solution[i] * signs[i] > 0.0))
        r.noalias() += xa.col(i) * solution[i];
    if (keep.empty()) return accept_or_revert();
    active = std::move(keep);
    signs = std::move(keep_signs);
  }
  return accept_or_revert();
}

// Each round runs cheap sweeps over a candidate set, then spends one X'r
// product on a global check that serves three purposes at once: the duality
// gap certificate, a machine-precision KKT fallback (for cases where the
// remaining moves are below double resolution, e.g. a response numerically
// orthogonal to every column), and the next round's candidate screen.
// Convergence is only ever declared from the global check, so a too-small
// candidate set costs one extra round, never correctness.
CoefficientEstimate solve(const Workspace& w, const Dataset& data, double lambda,
                          const Vector* warm, const LassoOptions& opts) {
  const Index p = data.p();
  Vector beta = warm != nullptr ? *warm : Vector::Zero(p);
  Vector r = beta.isZero(0.0) ? w.y : Vector(w.y - w.x * beta);

  const double y_sq = w.y.squaredNorm();
  const double y_rms = std::sqrt(std::max(y_sq / w.n, 1e-300));
  const double gap_tol = opts.gap_tol_factor * std::max(y_sq, 1e-300);
  const double grad_tol = 1e-10 * y_rms;

  double move_tol = std::sqrt(std::max(gap_tol / w.n, 1e-300));
  int sweeps = 0;
  double gap = std::numeric_limits<double>::infinity();
  std::vector<int> cands, last_newton_set;
  cands.reserve(64);
  Vector grad = w.x.transpose() * r / w.n;

  for (;;) {
    // candidates: current support plus near-threshold coordinates
    cands.clear();
    for (Index j = 0; j < p; ++j)
      if (beta[j] != 0.0 || std::fabs(grad[j]) >= 0.9 * lambda)
        cands.push_back(static_cast<int>(j));

    for (int inner = 0; inner < 512 && sweeps < opts.max_sweeps; ++inner) {
      double change = sweep(w, cands, lambda, beta, r);
      ++sweeps;
      if (inner == 0) {
        // shrink to the active set and jump to the exact solution for the
        // current sign pattern; the next sweeps only polish
        cands.erase(std::remove_if(cands.begin(), cands.end(),
                                   [&](int j) { return beta[j] == 0.0; }),
                    cands.end());
        if (cands != last_newton_set) {
          last_newton_set = cands;
          active_set_newton(w, lambda, beta, r);
        }
        continue;
      }
      if (change < move_tol) break;
    }

    grad.noalias() = w.x.transpose() * r / w.n;
    double kkt = 0.0;
    for (Index j = 0; j < p; ++j) {
      if (beta[j] != 0.0)
        kkt = std::max(kkt, std::fabs(grad[j] - lambda * (beta[j] > 0 ? 1.0 : -1.0)));
      else
        kkt = std::max(kkt, std::fabs(grad[j]) - lambda);
    }
    double r_sq = r.squaredNorm();
    double primal = r_sq / (2.0 * w.n) + lambda * beta.lpNorm<1>();
    double xtr_inf = grad.cwiseAbs().maxCoeff();
    double s = xtr_inf > lambda ? lambda / xtr_inf : 1.0;
    double dual = s * r.dot(w.y) / w.n - s * s * r_sq / (2.0 * w.n);
    gap = primal - dual;

    if (lambda > 0.0 && gap <= gap_tol) break;
    if (kkt <= grad_tol) break;
    move_tol *= 0.5;
    if (sweeps >= opts.max_sweeps)
      throw ConvergenceError("lasso coordinate descent did not reach the gap "
                             "tolerance after " + std::to_string(sweeps) +
                             " sweeps",
                             gap);
  }

  CoefficientEstimate est;
  est.beta = std::move(beta);
  est.lambda = lambda;
  est.intercept = 0.0;
  refresh_support(est);
  return est;
}

}  // namespace

CoefficientEstimate lasso_coordinate_descent(const Dataset& data, double lambda,
                                             const CoefficientEstimate* warm_start,
                                             const LassoOptions& opts) {
  if (!data.standardized)
    throw ConfigError("lasso_coordinate_descent expects standardized data");
  if (!std::isfinite(lambda) || lambda < 0.0)
    throw ConfigError("lambda must be finite and nonnegative");
  Workspace w(data);
  const Vector* warm = nullptr;
  if (warm_start != nullptr && warm_start->beta.size() == data.p())
    warm = &warm_start->beta;
  return solve(w, data, lambda, warm, opts);
}

double lambda_max(const Dataset& data) {
  return (data.x.transpose() * data.y).cwiseAbs().maxCoeff() /
         static_cast<double>(data.n());
}

Vector lambda_grid(double lmax, int size, double ratio) {
  if (size < 1) throw ConfigError("lambda grid needs at least one point");
  Vector grid(size);
  if (size == 1) {
    grid[0] = lmax;
    return grid;
  }
  double log_max = std::log(lmax), log_min = std::log(lmax * ratio);
  for (int i = 0; i < size; ++i)
    grid[i] = std::exp(log_max + (log_min - log_max) * i / (size - 1));
  return grid;
}

std::vector<CoefficientEstimate> lasso_path(const Dataset& data, const Vector& grid,
                                            const LassoOptions& opts) {
  if (!data.standardized) throw ConfigError("lasso_path expects standardized data");
  Workspace w(data);
  const double y_sq = w.y.squaredNorm();
  const Index support_cap = static_cast<Index>(opts.path_support_cap * w.n);
  std::vector<CoefficientEstimate> fits;
  fits.reserve(grid.size());
  const Vector* warm = nullptr;
  double prev_rss = y_sq;
  for (Index i = 0; i < grid.size(); ++i) {
    if (i > 0 && grid[i] > grid[i - 1])
      throw ConfigError("lambda grid must be descending");
    fits.push_back(solve(w, data, grid[i], warm, opts));
    warm = &fits.back().beta;
    double rss = (w.y - w.x * fits.back().beta).squaredNorm();
    double explained = std::max(0.0, y_sq - rss);
    bool saturated = rss <= opts.path_stop_ratio * y_sq ||
                     prev_rss - rss < opts.path_min_improvement * explained ||
                     static_cast<Index>(fits.back().support.size()) >= support_cap;
    prev_rss = rss;
    if (saturated) {
      for (Index k = i + 1; k < grid.size(); ++k) {
        fits.push_back(fits.back());
        fits.back().lambda = grid[k];
      }
      break;
    }
  }
  return fits;
}

CvLassoResult lasso_path_cv(const Dataset& data, Rng rng, const CvLassoOptions& opts) {
  if (!data.standardized) throw ConfigError("lasso_path_cv expects standardized data");
  const Index n = data.n();
  if (opts.n_folds < 3 || opts.n_folds > n)
    throw ConfigError("n_folds must lie in [3, n]");
  if (n / opts.n_folds < 2)
    throw ConfigError("degenerate folds: fewer than 2 samples per fold");

  Vector grid = lambda_grid(lambda_max(data), opts.grid_size, opts.grid_ratio);

  std::vector<int> assignment(n);
  for (Index i = 0; i < n; ++i) assignment[i] = static_cast<int>(i % opts.n_folds);
  rng.shuffle(assignment);

  Vector cv_sse = Vector::Zero(grid.size());
  for (int fold = 0; fold < opts.n_folds; ++fold) {
    std::vector<int> train, test;
    for (Index i = 0; i < n; ++i)
      (assignment[i] == fold ? test : train).push_back(static_cast<int>(i));

    Dataset train_data;
    train_data.x.resize(static_cast<Index>(train.size()), data.p());
    train_data.y.resize(static_cast<Index>(train.size()));
    for (std::size_t i = 0; i < train.size(); ++i) {
      train_data.x.row(static_cast<Index>(i)) = data.x.row(train[i]);
      train_data.y[static_cast<Index>(i)] = data.y[train[i]];
    }
    train_data.standardized = true;  // rows of standardized data, reused as-is
    train_data.column_means = data.column_means;
    train_data.column_scales = data.column_scales;
    train_data.y_mean = 0.0;

    Matrix test_x(static_cast<Index>(test.size()), data.p());
    Vector test_y(static_cast<Index>(test.size()));
    for (std::size_t i = 0; i < test.size(); ++i) {
      test_x.row(static_cast<Index>(i)) = data.x.row(test[i]);
      test_y[static_cast<Index>(i)] = data.y[test[i]];
    }

    auto fits = lasso_path(train_data, grid, opts.solver);
    for (Index g = 0; g < grid.size(); ++g)
      cv_sse[g] += (test_y - test_x * fits[static_cast<std::size_t>(g)].beta)
                       .squaredNorm();
  }

  Index best = 0;
  for (Index g = 1; g < grid.size(); ++g)
    if (cv_sse[g] < cv_sse[best]) best = g;

  // refit on the full data, warm-starting down the grid to the winner
  auto full_path = lasso_path(data, grid.head(best + 1), opts.solver);

  CvLassoResult out;
  out.fit = std::move(full_path.back());
  out.lambda_cv = grid[best];
  out.grid = std::move(grid);
  out.cv_mse = cv_sse / static_cast<double>(n);
  return out;
}

std::pair<CoefficientEstimate, NoiseEstimate> scaled_lasso_sigma(
    const Dataset& data, const LassoOptions& opts) {
  if (!data.standardized)
    throw ConfigError("scaled_lasso_sigma expects standardized data");
  const double n = static_cast<double>(data.n());
  const double lambda0 =
      std::sqrt(2.0 * std::log(static_cast<double>(data.p())) / n);

  double sigma = std::sqrt(data.y.squaredNorm() / n);
  if (sigma < 1e-10)
    throw DegenerateError("scaled lasso: response is (numerically) zero");

  CoefficientEstimate fit;
  fit.beta = Vector::Zero(data.p());
  const int max_iter = 100;
  for (int it = 0; it < max_iter; ++it) {
    fit = lasso_coordinate_descent(data, sigma * lambda0, &fit, opts);
    double rss = (data.y - data.x * fit.beta).squaredNorm();
    double next = std::sqrt(rss / n);
    if (next < 1e-10)
      throw DegenerateError("scaled lasso: fit interpolates the response, "
                            "noise scale is degenerate");
    double diff = std::fabs(next - sigma);
    sigma = next;
    if (diff < 1e-6) break;
  }
  return {fit, NoiseEstimate{sigma, NoiseMethod::ScaledLasso}};
}

NoiseEstimate cv_lasso_residual_sigma(const Dataset& data, Rng rng,
                                      const CvLassoOptions& opts) {
  auto cv = lasso_path_cv(data, rng, opts);
  double rss = (data.y - data.x * cv.fit.beta).squaredNorm();
  double dof = std::max<double>(
      1.0, static_cast<double>(data.n()) - static_cast<double>(cv.fit.support.size()));
  double sigma = std::sqrt(rss / dof);
  if (sigma < 1e-10)
    throw DegenerateError("cv-lasso residual noise scale is degenerate");
  return NoiseEstimate{sigma, NoiseMethod::CvLassoResidual};
}

NoiseEstimate estimate_noise(const Dataset& data, NoiseMethod method, Rng rng) {
  switch (method) {
    case NoiseMethod::ScaledLasso: return scaled_lasso_sigma(data).second;
    case NoiseMethod::CvLassoResidual: return cv_lasso_residual_sigma(data, rng);
    case NoiseMethod::Fixed: return NoiseEstimate{1.0, NoiseMethod::Fixed};
  }
  throw ConfigError("unknown noise method");
}

std::vector<int> lasso_path_first_entrants(const Dataset& data, int q,
                                           int grid_size, double grid_ratio) {
  if (!data.standardized)
    throw ConfigError("lasso_path_first_entrants expects standardized data");
  if (q <= 0) return {};
  Workspace w(data);
  Vector grid = lambda_grid(lambda_max(data), grid_size, grid_ratio);
  std::vector<int> entrants;
  std::vector<char> seen(data.p(), 0);
  Vector beta = Vector::Zero(data.p());
  CoefficientEstimate warm;
  const Vector* warm_beta = nullptr;
  LassoOptions opts;
  for (Index g = 0; g < grid.size() && static_cast<int>(entrants.size()) < q; ++g) {
    auto fit = solve(w, data, grid[g], warm_beta, opts);
    for (int j : fit.support) {
      if (!seen[j]) {
        seen[j] = 1;
        entrants.push_back(j);
      }
    }
    warm = std::move(fit);
    warm_beta = &warm.beta;
  }
  if (static_cast<int>(entrants.size()) > q) entrants.resize(q);
  return entrants;
}

double kkt_violation(const Dataset& data, const CoefficientEstimate& est) {
  const double n = static_cast<double>(data.n());
  Vector r = data.y - data.x * est.beta;
  Vector grad = data.x.transpose() * r / n;
  double worst = 0.0;
  for (Index j = 0; j < data.p(); ++j) {
    if (est.beta[j] != 0.0)
      worst = std::max(worst, std::fabs(grad[j] - est.lambda * (est.beta[j] > 0 ? 1.0 : -1.0)));
    else
      worst = std::max(worst, std::fabs(grad[j]) - est.lambda);
  }
  return worst;
}

double lasso_objective(const Dataset& data, const Vector& beta, double lambda) {
  double n = static_cast<double>(data.n());
  return (data.y - data.x * beta).squaredNorm() / (2.0 * n) +
         lambda * beta.lpNorm<1>();
}

}  // namespace hdinfer
