#include "hdinfer/ridge_projection.hpp"

#include <algorithm>
#include <cmath>

#include "hdinfer/distributions.hpp"
#include "hdinfer/random.hpp"

namespace hdinfer {

namespace {
constexpr double kNan = std::numeric_limits<double>::quiet_NaN();
}

RidgeProjectionComponents ridge_components(const Dataset& data, double lambda_ridge,
                                           double xi) {
  if (!(xi > 0.0 && xi < 0.5)) throw ConfigError("ridge: xi must lie in (0, 0.5)");
  Dataset sd = standardize(data);
  const Index n = sd.n(), p = sd.p();
  if (lambda_ridge <= 0.0) lambda_ridge = 1.0 / static_cast<double>(n);

  if (sd.x.cwiseAbs().maxCoeff() <= 0.0)
    throw DegenerateError("ridge: all-zero design");

  Eigen::BDCSVD<Matrix> svd(sd.x, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& sv = svd.singularValues();
  const double cutoff = 1e-10 * sv[0];
  int rank = 0;
  while (rank < sv.size() && sv[rank] > cutoff) ++rank;

  RidgeProjectionComponents comps;
  comps.lambda_ridge = lambda_ridge;
  comps.xi = xi;
  comps.rank = rank;
  comps.svd_u = svd.matrixU().leftCols(rank);
  comps.svd_v = svd.matrixV().leftCols(rank);

  // beta_ridge = V diag(d / (d^2 + n lambda)) U'y
  comps.shrink.resize(rank);
  for (int i = 0; i < rank; ++i)
    comps.shrink[i] = sv[i] / (sv[i] * sv[i] + static_cast<double>(n) * lambda_ridge);
  comps.beta_ridge =
      comps.svd_v *
      comps.shrink.cwiseProduct(comps.svd_u.transpose() * sd.y).eval();

  const Matrix& v = comps.svd_v;
  comps.p_r.noalias() = v * v.transpose();

  // omega_r = V diag( (d^2/n) / (d^2/n + lambda)^2 / n ) V'
  Vector w(rank);
  for (int i = 0; i < rank; ++i) {
    double eig = sv[i] * sv[i] / static_cast<double>(n);
    w[i] = eig / ((eig + lambda_ridge) * (eig + lambda_ridge)) / static_cast<double>(n);
  }
  comps.omega_r.noalias() = v * w.asDiagonal() * v.transpose();

  comps.delta_bound.resize(p);
  comps.defined.assign(p, true);
  const double rate =
      std::pow(std::log(static_cast<double>(p)) / static_cast<double>(n), 0.5 - xi);
  for (Index j = 0; j < p; ++j) {
    double pjj = comps.p_r(j, j);
    if (std::fabs(pjj) < 1e-8) {
      comps.defined[j] = false;
      comps.delta_bound[j] = kNan;
      continue;
    }
    double worst = 0.0;
    for (Index k = 0; k < p; ++k)
      if (k != j) worst = std::max(worst, std::fabs(comps.p_r(j, k)));
    comps.delta_bound[j] = worst / std::fabs(pjj) * rate;
  }
  return comps;
}

RidgeResult ridge_inference(const Dataset& data,
                            const RidgeProjectionComponents& comps,
                            const NoiseEstimate& sigma, std::uint64_t seed,
                            const RidgeOptions& opts) {
  if (!(sigma.sigma > 0.0) || !std::isfinite(sigma.sigma))
    throw ConfigError("ridge inference needs a positive finite noise scale");
  Dataset sd = standardize(data);
  const Index p = sd.p();
  if (comps.p_r.rows() != p)
    throw DimensionError("ridge components do not match the dataset");

  RidgeResult res;
  res.noise = sigma;
  if (opts.correction_lambda) {
    res.beta_correction = lasso_coordinate_descent(sd, *opts.correction_lambda);
  } else {
    Rng rng = Rng(seed).stream(0x81D6E);
    res.beta_correction = lasso_path_cv(sd, rng, opts.cv).fit;
  }
  const Vector& beta = res.beta_correction.beta;

  // the estimator always follows the response at hand
  Vector beta_ridge =
      comps.svd_v *
      comps.shrink.cwiseProduct(comps.svd_u.transpose() * sd.y).eval();

  Vector pb = comps.p_r * beta;
  res.b_r = Vector::Constant(p, kNan);
  res.p_raw = Vector::Constant(p, kNan);
  res.defined = comps.defined;

  InferenceResult& rep = res.report;
  rep.method = "ridge-proj";
  rep.alpha = opts.alpha;
  rep.level = opts.level;
  rep.noise = sigma;
  rep.estimate = Vector::Constant(p, kNan);
  rep.se = Vector::Constant(p, kNan);
  rep.ci_lower = Vector::Constant(p, kNan);
  rep.ci_upper = Vector::Constant(p, kNan);
  rep.ci_defined.assign(p, false);

  const double z_crit = normal_quantile(1.0 - (1.0 - opts.level) / 2.0);
  for (Index j = 0; j < p; ++j) {
    if (!comps.defined[j]) continue;
    double pjj = comps.p_r(j, j);
    res.b_r[j] = beta_ridge[j] / pjj - (pb[j] - pjj * beta[j]) / pjj;
    double omega_jj = std::max(comps.omega_r(j, j), 1e-300);
    double se_scaled = sigma.sigma * std::sqrt(omega_jj) / std::fabs(pjj);
    double slack = std::max(0.0, std::fabs(res.b_r[j]) - sigma.sigma * comps.delta_bound[j]);
    res.p_raw[j] = 2.0 * normal_sf(slack / se_scaled);
    if (res.p_raw[j] < 1e-300) res.p_raw[j] = 1e-300;

    double scale = sd.column_scales[j];
    double half_width = sigma.sigma * comps.delta_bound[j] + se_scaled * z_crit;
    rep.estimate[j] = res.b_r[j] / scale;
    rep.se[j] = se_scaled / scale;
    rep.ci_lower[j] = (res.b_r[j] - half_width) / scale;
    rep.ci_upper[j] = (res.b_r[j] + half_width) / scale;
    rep.ci_defined[j] = true;
  }

  std::vector<Index> defined_idx;
  for (Index j = 0; j < p; ++j)
    if (res.defined[j]) defined_idx.push_back(j);
  Vector sub(defined_idx.size());
  for (std::size_t i = 0; i < defined_idx.size(); ++i) sub[i] = res.p_raw[defined_idx[i]];
  Vector sub_adj = adjust_pvalues(sub, opts.adjustment);
  res.p_adjusted = Vector::Constant(p, kNan);
  for (std::size_t i = 0; i < defined_idx.size(); ++i)
    res.p_adjusted[defined_idx[i]] = sub_adj[i];

  rep.p_raw = res.p_raw;
  rep.p_adjusted = res.p_adjusted;
  int undefined = static_cast<int>(p - static_cast<Index>(defined_idx.size()));
  if (undefined > 0)
    rep.warnings.push_back(std::to_string(undefined) +
                           " variables are orthogonal to the row space and "
                           "were left undefined");
  return res;
}

GroupTestOutcome ridge_group_test(const RidgeProjectionComponents& comps,
                                  const RidgeResult& result,
                                  const std::vector<int>& group, int n_mc,
                                  std::uint64_t seed, int threads) {
  if (group.empty()) throw ConfigError("group test: empty group");
  if (n_mc < 10000) throw ConfigError("group test: need at least 10^4 draws");
  GroupTestOutcome out;
  std::vector<int> members;
  for (int j : group) {
    if (j < 0 || j >= comps.p_r.rows())
      throw ConfigError("group test: index out of range");
    if (result.defined[j])
      members.push_back(j);
    else
      out.dropped.push_back(j);
  }
  if (members.empty()) return out;

  const double sigma = result.noise.sigma;
  const Index g = static_cast<Index>(members.size());
  Matrix omega_gg(g, g);
  for (Index a = 0; a < g; ++a)
    for (Index b = 0; b < g; ++b)
      omega_gg(a, b) = comps.omega_r(members[a], members[b]);

  GaussianMaxSampler sampler = factor_covariance(omega_gg);
  out.covariance_repaired = sampler.repaired;

  Vector inv_sd = sampler.diagonal.cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
  Vector scale(g), offset(g);
  double observed = 0.0;
  for (Index a = 0; a < g; ++a) {
    int j = members[a];
    observed = std::max(observed, inv_sd[a] * std::fabs(result.b_r[j]) / sigma);
    scale[a] = inv_sd[a] / std::fabs(comps.p_r(j, j));
    offset[a] = inv_sd[a] * comps.delta_bound[j];  // sigma^-1 * (sigma * Delta_j)
  }
  out.p_value =
      mc_max_exceedance_pvalue(sampler, scale, offset, observed, n_mc, seed, threads);
  return out;
}

RidgeResult ridge_projection(const Dataset& data, std::uint64_t seed,
                             const RidgeOptions& opts,
                             std::optional<NoiseEstimate> noise) {
  Dataset sd = standardize(data);
  RidgeProjectionComponents comps = ridge_components(sd, opts.lambda_ridge, opts.xi);
  NoiseEstimate sigma = noise ? *noise
                              : estimate_noise(sd, NoiseMethod::ScaledLasso,
                                               Rng(seed).stream(0x51E));
  return ridge_inference(sd, comps, sigma, seed, opts);
}

}  // namespace hdinfer
