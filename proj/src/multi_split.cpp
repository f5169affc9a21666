#include "hdinfer/multi_split.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hdinfer/distributions.hpp"
#include "hdinfer/ols.hpp"
#include "hdinfer/parallel.hpp"

namespace hdinfer {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

double median_of(std::vector<double> v) {
  if (v.empty()) return kNan;
  std::sort(v.begin(), v.end());
  std::size_t m = v.size() / 2;
  return v.size() % 2 == 1 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

// first order-statistic index k (1-based) with k/B strictly above gamma_min
int first_rank_above(double gamma_min, int n_splits) {
  return static_cast<int>(std::floor(gamma_min * n_splits + 1e-9)) + 1;
}

// Per-split adjusted p-value for the shifted hypothesis beta_j = c.
double split_p_corr_at(const SplitRecord& s, int j, double c) {
  if (!std::isfinite(s.estimate[j])) return 1.0;
  double p_raw;
  if (s.se[j] > 0.0) {
    double t = (s.estimate[j] - c) / s.se[j];
    p_raw = student_t_two_sided_p(t, s.dof);
  } else {
    p_raw = s.estimate[j] == c ? 1.0 : 1e-300;
  }
  return std::min(1.0, p_raw * static_cast<double>(s.selected.size()));
}

// Membership test for the aggregated interval at point c.
bool ci_covers(const MultiSplitResult& res, double alpha, int j, double c) {
  const int n_splits = static_cast<int>(res.splits.size());
  std::vector<double> pc(n_splits);
  for (int b = 0; b < n_splits; ++b) pc[b] = split_p_corr_at(res.splits[b], j, c);
  std::sort(pc.begin(), pc.end());
  const double log_factor = 1.0 - std::log(res.gamma_min);
  const int k_start = first_rank_above(res.gamma_min, n_splits);
  for (int k = k_start; k <= n_splits; ++k) {
    double threshold = alpha * (static_cast<double>(k) / n_splits) / log_factor;
    if (pc[k - 1] < threshold) return false;
  }
  return true;
}

}  // namespace

Screener cv_lasso_screener(CvLassoOptions opts) {
  return [opts](const Dataset& half, Rng rng) -> ScreenResult {
    Dataset sd = standardize_lenient(half);
    CvLassoOptions local = opts;
    // halves can be small; keep folds feasible
    int max_folds = static_cast<int>(sd.n()) / 2;
    local.n_folds = std::max(3, std::min(local.n_folds, max_folds));
    auto cv = lasso_path_cv(sd, rng, local);
    ScreenResult out;
    out.selected = cv.fit.support;
    out.coef = cv.fit.beta;
    return out;
  };
}

SplitRecord single_split(const Dataset& data, const Screener& screener, Rng rng,
                         int max_retries) {
  const Index n = data.n(), p = data.p();
  const int n_half = static_cast<int>(n) / 2;
  std::string first_failure;

  SplitRecord rec;
  for (int attempt = 0; attempt <= max_retries; ++attempt) {
    rec = SplitRecord{};
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm);
    rec.i1.assign(perm.begin(), perm.begin() + n_half);
    rec.i2.assign(perm.begin() + n_half, perm.end());
    std::sort(rec.i1.begin(), rec.i1.end());
    std::sort(rec.i2.begin(), rec.i2.end());

    ScreenResult screen = screener(subset_rows(data, rec.i1), rng.stream(7000 + attempt));
    std::vector<int> sel = screen.selected;
    if (static_cast<int>(sel.size()) > n_half) {
      std::sort(sel.begin(), sel.end(), [&](int a, int b) {
        return std::fabs(screen.coef[a]) > std::fabs(screen.coef[b]);
      });
      sel.resize(n_half);
      rec.truncated = true;
    }
    std::sort(sel.begin(), sel.end());
    rec.selected = sel;

    rec.p_raw = Vector::Ones(p);
    rec.p_corr = Vector::Ones(p);
    rec.estimate = Vector::Constant(p, kNan);
    rec.se = Vector::Constant(p, kNan);

    if (sel.empty()) {
      rec.dof = static_cast<double>(rec.i2.size()) - 1.0;
      return rec;
    }

    Matrix x_sub(static_cast<Index>(rec.i2.size()), static_cast<Index>(sel.size()));
    Vector y_sub(static_cast<Index>(rec.i2.size()));
    for (std::size_t i = 0; i < rec.i2.size(); ++i) {
      y_sub[static_cast<Index>(i)] = data.y[rec.i2[i]];
      for (std::size_t k = 0; k < sel.size(); ++k)
        x_sub(static_cast<Index>(i), static_cast<Index>(k)) = data.x(rec.i2[i], sel[k]);
    }

    try {
      OlsSummary ols = ols_low_dim_inference(x_sub, y_sub);
      double n_sel = static_cast<double>(sel.size());
      for (std::size_t k = 0; k < sel.size(); ++k) {
        int j = sel[k];
        rec.p_raw[j] = ols.p_value[static_cast<Index>(k)];
        rec.p_corr[j] = std::min(1.0, rec.p_raw[j] * n_sel);
        rec.estimate[j] = ols.estimate[static_cast<Index>(k)];
        rec.se[j] = ols.se[static_cast<Index>(k)];
      }
      rec.dof = ols.dof;
      return rec;
    } catch (const RankError& e) {
      if (first_failure.empty())
        first_failure = std::string("rank condition on the tested half failed: ") + e.what();
    } catch (const DimensionError& e) {
      if (first_failure.empty())
        first_failure = std::string("too many selected variables for the tested half: ") + e.what();
    }
  }
  rec.failed = true;
  rec.failure_reason = first_failure;
  return rec;
}

Vector aggregate(const Matrix& p_corr, const AggregationConfig& cfg) {
  const int n_splits = static_cast<int>(p_corr.rows());
  const Index p = p_corr.cols();
  if (n_splits < 1) throw ConfigError("aggregate: need at least one split");
  if (!(cfg.gamma_min > 0.0 && cfg.gamma_min < 1.0))
    throw ConfigError("aggregate: gamma_min must lie in (0,1)");
  for (Index i = 0; i < p_corr.size(); ++i)
    if (!(p_corr.data()[i] >= 0.0 && p_corr.data()[i] <= 1.0))
      throw ConfigError("aggregate: p-values must lie in [0,1]");

  Vector out(p);
  std::vector<double> column(n_splits);
  const double log_factor = 1.0 - std::log(cfg.gamma_min);
  const int k_start = first_rank_above(cfg.gamma_min, n_splits);

  for (Index j = 0; j < p; ++j) {
    for (int b = 0; b < n_splits; ++b) column[b] = p_corr(b, j);
    std::sort(column.begin(), column.end());
    if (cfg.fixed_gamma) {
      double gamma = *cfg.fixed_gamma;
      if (!(gamma > 0.0 && gamma < 1.0))
        throw ConfigError("aggregate: fixed gamma must lie in (0,1)");
      int k = std::clamp(
          static_cast<int>(std::ceil(gamma * n_splits - 1e-9)), 1, n_splits);
      out[j] = std::min(1.0, column[k - 1] / gamma);
    } else {
      double best = 1.0;
      for (int k = k_start; k <= n_splits; ++k) {
        double q = std::min(1.0, column[k - 1] * n_splits / static_cast<double>(k));
        best = std::min(best, q);
      }
      out[j] = std::min(1.0, log_factor * best);
    }
  }
  return out;
}

MultiSplitResult multi_split_inference(const Dataset& data,
                                       const AggregationConfig& cfg,
                                       const Screener& screener,
                                       std::uint64_t seed, int threads) {
  if (cfg.n_splits < 1) throw ConfigError("multi-split: n_splits must be >= 1");
  if (!(cfg.gamma_min > 0.0 && cfg.gamma_min < 1.0))
    throw ConfigError("multi-split: gamma_min must lie in (0,1)");
  const Index p = data.p();

  std::vector<SplitRecord> all(cfg.n_splits);
  Rng root(seed);
  parallel_for(
      cfg.n_splits,
      [&](int b) { all[b] = single_split(data, screener, root.stream(b), cfg.max_retries); },
      threads);

  MultiSplitResult res;
  res.gamma_min = cfg.gamma_min;
  res.fixed_gamma = cfg.fixed_gamma;
  res.ci_level = cfg.ci_level;
  for (auto& s : all) {
    if (s.failed)
      ++res.n_failed;
    else
      res.splits.push_back(std::move(s));
  }
  if (res.n_failed > 0.2 * cfg.n_splits)
    throw MethodError(
        "multi-split aborted: " + std::to_string(res.n_failed) + " of " +
        std::to_string(cfg.n_splits) +
        " splits violated the rank condition on the tested half (selected "
        "submatrix not full rank); first failure: " +
        (all.empty() ? "" : all.front().failure_reason));

  const int n_ret = static_cast<int>(res.splits.size());
  Matrix pc(n_ret, p);
  for (int b = 0; b < n_ret; ++b) pc.row(b) = res.splits[b].p_corr.transpose();
  res.p_aggregated = aggregate(pc, cfg);

  // reporting grid for Q_j(gamma)
  const int grid_len = 96;  // 0.05, 0.06, ..., 1.00
  res.gamma_grid.resize(grid_len);
  for (int g = 0; g < grid_len; ++g) res.gamma_grid[g] = 0.05 + 0.01 * g;
  res.q_gamma.resize(p, grid_len);
  std::vector<double> column(n_ret);
  for (Index j = 0; j < p; ++j) {
    for (int b = 0; b < n_ret; ++b) column[b] = pc(b, j);
    std::sort(column.begin(), column.end());
    for (int g = 0; g < grid_len; ++g) {
      double gamma = res.gamma_grid[g];
      int k = std::clamp(static_cast<int>(std::ceil(gamma * n_ret - 1e-9)), 1, n_ret);
      res.q_gamma(j, g) = std::min(1.0, column[k - 1] / gamma);
    }
  }

  res.estimate = Vector::Constant(p, kNan);
  for (Index j = 0; j < p; ++j) {
    std::vector<double> ests;
    for (const auto& s : res.splits)
      if (std::isfinite(s.estimate[j])) ests.push_back(s.estimate[j]);
    if (!ests.empty()) res.estimate[j] = median_of(std::move(ests));
  }

  res.ci_lower = Vector::Constant(p, kNan);
  res.ci_upper = Vector::Constant(p, kNan);
  res.ci_defined.assign(p, false);
  for (Index j = 0; j < p; ++j) {
    CiBound b = multi_split_ci(res, cfg.ci_level, static_cast<int>(j));
    if (b.defined) {
      res.ci_lower[j] = b.lower;
      res.ci_upper[j] = b.upper;
      res.ci_defined[j] = true;
    }
  }
  return res;
}

CiBound multi_split_ci(const MultiSplitResult& res, double level, int j) {
  if (!(level > 0.0 && level < 1.0))
    throw ConfigError("multi_split_ci: level must lie in (0,1)");
  const double alpha = 1.0 - level;
  const int n_splits = static_cast<int>(res.splits.size());
  CiBound out;
  if (n_splits == 0) return out;
  if (j < 0 || j >= res.p_aggregated.size())
    throw ConfigError("multi_split_ci: variable index out of range");

  int n_sel = 0;
  double max_se = 0.0;
  std::vector<double> ests;
  for (const auto& s : res.splits) {
    if (std::isfinite(s.estimate[j])) {
      ++n_sel;
      ests.push_back(s.estimate[j]);
      if (std::isfinite(s.se[j])) max_se = std::max(max_se, s.se[j]);
    }
  }
  // a variable whose selections never rank above gamma_min cannot constrain
  // the interval: report undefined instead of (-inf, inf)
  if (n_sel < first_rank_above(res.gamma_min, n_splits)) return out;

  std::vector<double> candidates;
  candidates.push_back(median_of(ests));
  for (double e : ests) candidates.push_back(e);
  double center = kNan;
  for (double c : candidates) {
    if (std::isfinite(c) && ci_covers(res, alpha, j, c)) {
      center = c;
      break;
    }
  }
  if (!std::isfinite(center)) return out;

  const double scale = std::max({1.0, std::fabs(center), max_se});
  const double tol = 1e-6 * scale;

  auto find_edge = [&](double direction) -> double {
    double step = 10.0 * std::max(max_se, tol);
    double outside = center + direction * step;
    int guard = 0;
    while (ci_covers(res, alpha, j, outside)) {
      step *= 2.0;
      outside = center + direction * step;
      if (++guard > 200) return kNan;
    }
    double inside = center;
    while (std::fabs(outside - inside) > tol) {
      double mid = 0.5 * (inside + outside);
      if (ci_covers(res, alpha, j, mid))
        inside = mid;
      else
        outside = mid;
    }
    return 0.5 * (inside + outside);
  };

  double hi = find_edge(+1.0);
  double lo = find_edge(-1.0);
  if (!std::isfinite(hi) || !std::isfinite(lo)) return out;
  out.lower = lo;
  out.upper = hi;
  out.defined = true;
  return out;
}

InferenceResult to_inference_result(const MultiSplitResult& res, double alpha) {
  InferenceResult out;
  out.method = "multi-split";
  out.estimate = res.estimate;
  out.se = Vector::Constant(res.p_aggregated.size(), kNan);
  out.p_raw = res.p_aggregated;
  out.p_adjusted = res.p_aggregated;
  out.ci_lower = res.ci_lower;
  out.ci_upper = res.ci_upper;
  out.ci_defined = res.ci_defined;
  out.level = res.ci_level;
  out.alpha = alpha;
  out.noise.sigma = kNan;
  out.warnings.push_back("aggregated p-values are already FWER-adjusted");
  if (res.n_failed > 0)
    out.warnings.push_back(std::to_string(res.n_failed) + " splits failed and were dropped");
  return out;
}

}  // namespace hdinfer
