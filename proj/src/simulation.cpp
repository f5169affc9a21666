#include "hdinfer/simulation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "hdinfer/csv.hpp"
#include "hdinfer/desparsified_lasso.hpp"
#include "hdinfer/multi_split.hpp"
#include "hdinfer/parallel.hpp"
#include "hdinfer/ridge_projection.hpp"

namespace hdinfer {

DesignType design_from_string(const std::string& name) {
  if (name == "toeplitz") return DesignType::Toeplitz;
  if (name == "exp-decay") return DesignType::ExpDecay;
  if (name == "equi-corr") return DesignType::EquiCorr;
  if (name == "block-equi-corr") return DesignType::BlockEquiCorr;
  if (name == "real-x") return DesignType::RealX;
  throw ConfigError("unknown design: " + name);
}

std::string to_string(DesignType d) {
  switch (d) {
    case DesignType::Toeplitz: return "toeplitz";
    case DesignType::ExpDecay: return "exp-decay";
    case DesignType::EquiCorr: return "equi-corr";
    case DesignType::BlockEquiCorr: return "block-equi-corr";
    case DesignType::RealX: return "real-x";
  }
  return "unknown";
}

ScenarioMode mode_from_string(const std::string& name) {
  if (name == "pvalues") return ScenarioMode::PValues;
  if (name == "ci-coverage") return ScenarioMode::CiCoverage;
  if (name == "group-experiment") return ScenarioMode::GroupExperiment;
  throw ConfigError("unknown scenario mode: " + name);
}

std::string to_string(ScenarioMode m) {
  switch (m) {
    case ScenarioMode::PValues: return "pvalues";
    case ScenarioMode::CiCoverage: return "ci-coverage";
    case ScenarioMode::GroupExperiment: return "group-experiment";
  }
  return "unknown";
}

CoefScheme CoefScheme::parse(const std::string& text) {
  CoefScheme s;
  auto open = text.find('(');
  auto close = text.rfind(')');
  if (open == std::string::npos || close == std::string::npos || close < open)
    throw ConfigError("bad coefficient scheme: " + text);
  std::string head = text.substr(0, open);
  std::string args = text.substr(open + 1, close - open - 1);
  if (head == "fixed") {
    s.is_fixed = true;
    s.value = std::stod(args);
  } else if (head == "U") {
    s.is_fixed = false;
    auto comma = args.find(',');
    if (comma == std::string::npos)
      throw ConfigError("bad coefficient scheme: " + text);
    s.lo = std::stod(args.substr(0, comma));
    s.hi = std::stod(args.substr(comma + 1));
    if (!(s.lo < s.hi)) throw ConfigError("bad coefficient range: " + text);
  } else {
    throw ConfigError("bad coefficient scheme: " + text);
  }
  return s;
}

std::string CoefScheme::str() const {
  if (is_fixed) return "fixed(" + std::to_string(value) + ")";
  return "U(" + std::to_string(lo) + "," + std::to_string(hi) + ")";
}

double CoefScheme::draw(Rng& rng) const {
  return is_fixed ? value : rng.uniform(lo, hi);
}

void ScenarioConfig::validate() const {
  if (n < 3) throw ConfigError("scenario: n must be at least 3");
  if (p < 1) throw ConfigError("scenario: p must be at least 1");
  if (s0 < 0 || s0 > p) throw ConfigError("scenario: s0 must lie in [0, p]");
  if (!(alpha >= 0.0 && alpha < 1.0))
    throw ConfigError("scenario: alpha must lie in [0,1)");
  if (!(ci_level > 0.0 && ci_level < 1.0))
    throw ConfigError("scenario: ci_level must lie in (0,1)");
  if (n_y_replicates < 1 || n_outer_replicates < 1)
    throw ConfigError("scenario: replicate counts must be positive");
  if (design == DesignType::BlockEquiCorr) {
    if (block_size < 2 || p % block_size != 0)
      throw ConfigError("scenario: block size must divide p");
    if (!(rho >= 0.0 && rho < 1.0)) throw ConfigError("scenario: rho must lie in [0,1)");
  }
  if (design == DesignType::RealX && real_x_file.empty())
    throw ConfigError("scenario: real-x design needs real_x_file");
  if (methods.empty()) throw ConfigError("scenario: methods list is empty");
  for (const auto& m : methods)
    if (m != "ridge-proj" && m != "lasso-proj" && m != "multi-split")
      throw ConfigError("scenario: unknown method " + m);
  CoefScheme::parse(coef_scheme);
  if (lasso_proj_tuning != "zz" && lasso_proj_tuning != "cv")
    throw ConfigError("scenario: lasso_proj_tuning must be 'zz' or 'cv'");
}

DesignSampler DesignSampler::prepare(const ScenarioConfig& cfg) {
  DesignSampler s;
  s.type_ = cfg.design;
  s.n_ = cfg.n;
  s.p_ = cfg.p;
  s.block_ = cfg.block_size;
  s.rho_ = cfg.rho;
  if (cfg.design == DesignType::ExpDecay) {
    // Sigma is defined through its inverse: invert, then factor
    Matrix precision(cfg.p, cfg.p);
    for (int j = 0; j < cfg.p; ++j)
      for (int k = 0; k < cfg.p; ++k)
        precision(j, k) = std::pow(0.4, std::fabs(j - k) / 5.0);
    Eigen::LLT<Matrix> prec_llt(precision);
    if (prec_llt.info() != Eigen::Success)
      throw DegenerateError("exp-decay precision matrix is not positive definite");
    Matrix sigma = prec_llt.solve(Matrix::Identity(cfg.p, cfg.p));
    Eigen::LLT<Matrix> sig_llt(0.5 * (sigma + sigma.transpose()));
    if (sig_llt.info() != Eigen::Success)
      throw DegenerateError("exp-decay covariance factorization failed");
    s.chol_ = sig_llt.matrixL();
  } else if (cfg.design == DesignType::RealX) {
    s.real_x_ = load_real_design(cfg.real_x_file, cfg.n, cfg.p);
  }
  return s;
}

Matrix DesignSampler::sample(Rng& rng) const {
  switch (type_) {
    case DesignType::Toeplitz: {
      // AR(1) recursion gives Sigma_jk = 0.9^|j-k| exactly
      const double rho = 0.9, s = std::sqrt(1.0 - rho * rho);
      Matrix x(n_, p_);
      for (int i = 0; i < n_; ++i) {
        x(i, 0) = rng.normal();
        for (int j = 1; j < p_; ++j) x(i, j) = rho * x(i, j - 1) + s * rng.normal();
      }
      return x;
    }
    case DesignType::EquiCorr: {
      const double a = std::sqrt(0.8), b = std::sqrt(0.2);
      Matrix x(n_, p_);
      for (int i = 0; i < n_; ++i) {
        double g = rng.normal();
        for (int j = 0; j < p_; ++j) x(i, j) = a * g + b * rng.normal();
      }
      return x;
    }
    case DesignType::BlockEquiCorr: {
      const double a = std::sqrt(rho_), b = std::sqrt(1.0 - rho_);
      Matrix x(n_, p_);
      for (int i = 0; i < n_; ++i) {
        for (int blk = 0; blk < p_ / block_; ++blk) {
          double g = rng.normal();
          for (int j = blk * block_; j < (blk + 1) * block_; ++j)
            x(i, j) = a * g + b * rng.normal();
        }
      }
      return x;
    }
    case DesignType::ExpDecay: {
      Matrix z(n_, p_);
      for (int i = 0; i < n_; ++i)
        for (int j = 0; j < p_; ++j) z(i, j) = rng.normal();
      return z * chol_.transpose();
    }
    case DesignType::RealX: return real_x_;
  }
  throw ConfigError("unknown design type");
}

Matrix load_real_design(const std::string& path, int n, int p) {
  CsvTable table = read_csv(path);
  if (table.values.rows() < n)
    throw ConfigError("real design has fewer than n rows");
  if (table.values.cols() < p)
    throw ConfigError("real design has fewer than p columns");
  // keep the p columns with the highest empirical variance
  std::vector<std::pair<double, int>> ranked;
  for (Index j = 0; j < table.values.cols(); ++j) {
    double mean = table.values.col(j).mean();
    double var = (table.values.col(j).array() - mean).square().mean();
    ranked.emplace_back(-var, static_cast<int>(j));
  }
  std::sort(ranked.begin(), ranked.end());
  Matrix x(n, p);
  for (int j = 0; j < p; ++j)
    x.col(j) = table.values.col(ranked[j].second).head(n);
  return x;
}

TrueCoefficients generate_coefficients(const ScenarioConfig& cfg, Rng& rng) {
  CoefScheme scheme = CoefScheme::parse(cfg.coef_scheme);
  TrueCoefficients out;
  out.beta = Vector::Zero(cfg.p);
  if (cfg.positions == CoefPositions::FirstS0) {
    for (int j = 0; j < cfg.s0; ++j) out.active.push_back(j);
  } else {
    out.active = rng.sample_without_replacement(cfg.p, cfg.s0);
    std::sort(out.active.begin(), out.active.end());
  }
  for (int j : out.active) out.beta[j] = scheme.draw(rng);
  return out;
}

ReplicateScore score_rejections(const Vector& p_adjusted, double alpha,
                                const Vector& beta_truth) {
  ReplicateScore out;
  int true_hits = 0, n_active = 0;
  for (Index j = 0; j < p_adjusted.size(); ++j) {
    bool active = beta_truth[j] != 0.0;
    n_active += active;
    bool reject = std::isfinite(p_adjusted[j]) && p_adjusted[j] <= alpha;
    if (!reject) continue;
    if (active)
      ++true_hits;
    else
      ++out.v_count;
  }
  out.any_false = out.v_count > 0;
  out.power_fraction =
      n_active == 0 ? 0.0 : static_cast<double>(true_hits) / n_active;
  return out;
}

namespace {

struct OuterAccumulator {
  std::vector<OuterMetrics> per_method;  // one per configured method
};

std::vector<int> inactive_set(const std::vector<int>& active, int p) {
  std::vector<int> out;
  std::vector<char> is_active(p, 0);
  for (int j : active) is_active[j] = 1;
  for (int j = 0; j < p; ++j)
    if (!is_active[j]) out.push_back(j);
  return out;
}

// Per-outer-replicate engine state that does not depend on y.
struct XLevelState {
  Dataset x_only;  // standardized x with a placeholder response
  std::optional<RidgeProjectionComponents> ridge;
  std::optional<NodewiseComponents> nodewise;
};

XLevelState prepare_x_level(const ScenarioConfig& cfg, const Matrix& x,
                            std::uint64_t seed) {
  XLevelState st;
  Dataset raw;
  raw.x = x;
  raw.y = Vector::Zero(x.rows());
  raw.standardized = false;
  raw.column_means = Vector::Zero(x.cols());
  raw.column_scales = Vector::Ones(x.cols());
  st.x_only = standardize_lenient(raw);

  bool want_ridge = false, want_despars = false;
  for (const auto& m : cfg.methods) {
    want_ridge |= m == "ridge-proj";
    want_despars |= m == "lasso-proj";
  }
  if (want_ridge) st.ridge = ridge_components(st.x_only);
  if (want_despars) {
    NodewiseOptions nw;
    nw.tuning = cfg.lasso_proj_tuning == "cv" ? NodewiseTuning::Cv : NodewiseTuning::Zz;
    st.nodewise = nodewise_lasso(st.x_only, nw, seed);
  }
  return st;
}

Dataset with_response(const XLevelState& st, const Vector& y) {
  Dataset d = st.x_only;
  d.y_mean = y.mean();
  d.y = y.array() - d.y_mean;
  return d;
}

InferenceResult run_method(const std::string& method, const ScenarioConfig& cfg,
                           const XLevelState& st, const Dataset& data,
                           std::uint64_t seed) {
  if (method == "ridge-proj") {
    auto sigma = estimate_noise(data, NoiseMethod::ScaledLasso, Rng(seed).stream(1));
    RidgeOptions opts;
    opts.alpha = cfg.alpha;
    opts.level = cfg.ci_level;
    return ridge_inference(data, *st.ridge, sigma, seed, opts).report;
  }
  if (method == "lasso-proj") {
    auto sigma = estimate_noise(data, NoiseMethod::ScaledLasso, Rng(seed).stream(1));
    DesparsOptions opts;
    opts.alpha = cfg.alpha;
    opts.level = cfg.ci_level;
    return desparsified_inference(data, *st.nodewise, sigma, seed, opts).report;
  }
  if (method == "multi-split") {
    AggregationConfig ms;
    ms.n_splits = cfg.multi_split_b;
    ms.ci_level = cfg.ci_level;
    MultiSplitResult res =
        multi_split_inference(data, ms, cv_lasso_screener(ms.screener_cv),
                              Rng(seed).next_u64(), 1);
    return to_inference_result(res, cfg.alpha);
  }
  throw ConfigError("unknown method " + method);
}

}  // namespace

ScenarioResult run_scenario(const ScenarioConfig& cfg) {
  cfg.validate();
  auto t0 = std::chrono::steady_clock::now();

  ScenarioResult result;
  result.config = cfg;

  if (cfg.mode == ScenarioMode::CiCoverage) {
    result.coverage = ci_coverage_protocol(cfg);
    result.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return result;
  }

  DesignSampler sampler = DesignSampler::prepare(cfg);
  const int n_methods = static_cast<int>(cfg.methods.size());
  const int outer = cfg.n_outer_replicates;
  const int inner = cfg.n_y_replicates;

  std::vector<OuterAccumulator> accum(outer);
  std::vector<std::vector<GroupMetrics>> group_accum(outer);

  Rng root(cfg.seed);
  parallel_for(
      outer,
      [&](int o) {
        Rng rng_outer = root.stream(o);
        Matrix x = sampler.sample(rng_outer);
        TrueCoefficients truth = generate_coefficients(cfg, rng_outer);
        XLevelState st = prepare_x_level(cfg, x, rng_outer.next_u64());

        std::vector<OuterMetrics> om(n_methods);
        std::vector<GroupMetrics> gm(n_methods);
        for (int m = 0; m < n_methods; ++m) {
          om[m].method = cfg.methods[m];
          om[m].outer = o;
          gm[m].method = cfg.methods[m];
        }
        std::vector<int> s0c = inactive_set(truth.active, cfg.p);
        std::vector<int> block_union;
        if (cfg.mode == ScenarioMode::GroupExperiment) {
          std::vector<char> in_union(cfg.p, 0);
          for (int j : truth.active) {
            int blk = j / cfg.block_size;
            for (int k = blk * cfg.block_size; k < (blk + 1) * cfg.block_size; ++k)
              in_union[k] = 1;
          }
          for (int j = 0; j < cfg.p; ++j)
            if (in_union[j]) block_union.push_back(j);
        }
        std::vector<int> all(cfg.p);
        std::iota(all.begin(), all.end(), 0);

        std::vector<int> ran(n_methods, 0);
        for (int i = 0; i < inner; ++i) {
          Rng rng_inner = rng_outer.stream(100000 + i);
          Vector eps = rng_inner.normal_vector(cfg.n);
          Vector y = x * truth.beta + eps;
          Dataset data = with_response(st, y);

          for (int m = 0; m < n_methods; ++m) {
            std::uint64_t method_seed = rng_inner.stream(50 + m).next_u64();
            try {
              if (cfg.mode == ScenarioMode::PValues) {
                InferenceResult res =
                    run_method(cfg.methods[m], cfg, st, data, method_seed);
                ReplicateScore rep =
                    score_rejections(res.p_adjusted, cfg.alpha, truth.beta);
                om[m].fwer += rep.any_false;
                om[m].power += rep.power_fraction;
                om[m].avg_v += rep.v_count;
                ++ran[m];
              } else {  // GroupExperiment
                const std::string& method = cfg.methods[m];
                double p_root, p_union, p_s0, p_s0c;
                if (method == "ridge-proj") {
                  auto sigma = estimate_noise(data, NoiseMethod::ScaledLasso,
                                              Rng(method_seed).stream(1));
                  RidgeOptions opts;
                  opts.alpha = cfg.alpha;
                  auto rr = ridge_inference(data, *st.ridge, sigma, method_seed, opts);
                  p_root = ridge_group_test(*st.ridge, rr, all, cfg.group_n_mc,
                                            method_seed + 1, 1)
                               .p_value;
                  p_union = ridge_group_test(*st.ridge, rr, block_union,
                                             cfg.group_n_mc, method_seed + 2, 1)
                                .p_value;
                  p_s0 = ridge_group_test(*st.ridge, rr, truth.active,
                                          cfg.group_n_mc, method_seed + 3, 1)
                             .p_value;
                  p_s0c = ridge_group_test(*st.ridge, rr, s0c, cfg.group_n_mc,
                                           method_seed + 4, 1)
                              .p_value;
                } else if (method == "lasso-proj") {
                  auto sigma = estimate_noise(data, NoiseMethod::ScaledLasso,
                                              Rng(method_seed).stream(1));
                  DesparsOptions opts;
                  opts.alpha = cfg.alpha;
                  auto dr =
                      desparsified_inference(data, *st.nodewise, sigma, method_seed, opts);
                  p_root = despars_group_test(dr, *st.nodewise, all, cfg.group_n_mc,
                                              method_seed + 1, 1)
                               .p_value;
                  p_union = despars_group_test(dr, *st.nodewise, block_union,
                                               cfg.group_n_mc, method_seed + 2, 1)
                                .p_value;
                  p_s0 = despars_group_test(dr, *st.nodewise, truth.active,
                                            cfg.group_n_mc, method_seed + 3, 1)
                             .p_value;
                  p_s0c = despars_group_test(dr, *st.nodewise, s0c, cfg.group_n_mc,
                                             method_seed + 4, 1)
                              .p_value;
                } else {
                  throw ConfigError("group experiment supports ridge-proj and "
                                    "lasso-proj only");
                }
                gm[m].reject_root += p_root <= cfg.alpha;
                gm[m].reject_block_union += p_union <= cfg.alpha;
                gm[m].reject_s0 += p_s0 <= cfg.alpha;
                gm[m].reject_s0c += p_s0c <= cfg.alpha;
                ++gm[m].n_runs;
                ++ran[m];
              }
            } catch (const std::exception&) {
              ++om[m].failures;
              ++gm[m].failures;
            }
          }
        }
        for (int m = 0; m < n_methods; ++m) {
          if (ran[m] > 0) {
            om[m].fwer /= ran[m];
            om[m].power /= ran[m];
            om[m].avg_v /= ran[m];
            if (gm[m].n_runs > 0) {
              gm[m].reject_root /= gm[m].n_runs;
              gm[m].reject_block_union /= gm[m].n_runs;
              gm[m].reject_s0 /= gm[m].n_runs;
              gm[m].reject_s0c /= gm[m].n_runs;
            }
          }
        }
        accum[o].per_method = std::move(om);
        group_accum[o] = std::move(gm);
      },
      cfg.threads);

  // deterministic merge in outer order
  for (int m = 0; m < n_methods; ++m) {
    MethodMetrics pooled;
    pooled.method = cfg.methods[m];
    GroupMetrics gpooled;
    gpooled.method = cfg.methods[m];
    int outer_used = 0, g_used = 0;
    for (int o = 0; o < outer; ++o) {
      const OuterMetrics& om = accum[o].per_method[m];
      result.per_outer.push_back(om);
      pooled.failures += om.failures;
      int om_runs = inner - om.failures;
      if (om_runs > 0) {
        pooled.fwer += om.fwer;
        pooled.power += om.power;
        pooled.avg_v += om.avg_v;
        pooled.n_runs += om_runs;
        ++outer_used;
      }
      const GroupMetrics& g = group_accum[o][m];
      if (g.n_runs > 0) {
        gpooled.reject_root += g.reject_root;
        gpooled.reject_block_union += g.reject_block_union;
        gpooled.reject_s0 += g.reject_s0;
        gpooled.reject_s0c += g.reject_s0c;
        gpooled.n_runs += g.n_runs;
        gpooled.failures += g.failures;
        ++g_used;
      }
    }
    if (outer_used > 0) {
      pooled.fwer /= outer_used;
      pooled.power /= outer_used;
      pooled.avg_v /= outer_used;
    }
    result.pooled.push_back(pooled);
    if (cfg.mode == ScenarioMode::GroupExperiment && g_used > 0) {
      gpooled.reject_root /= g_used;
      gpooled.reject_block_union /= g_used;
      gpooled.reject_s0 /= g_used;
      gpooled.reject_s0c /= g_used;
      result.groups.push_back(gpooled);
    }
  }

  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

std::vector<CoverageCounts> ci_coverage_protocol(const ScenarioConfig& cfg) {
  cfg.validate();
  DesignSampler sampler = DesignSampler::prepare(cfg);
  Rng root(cfg.seed);
  Rng rng_outer = root.stream(0);
  Matrix x = sampler.sample(rng_outer);
  TrueCoefficients truth = generate_coefficients(cfg, rng_outer);
  XLevelState st = prepare_x_level(cfg, x, rng_outer.next_u64());

  const int n_methods = static_cast<int>(cfg.methods.size());
  std::vector<CoverageCounts> out(n_methods);
  for (int m = 0; m < n_methods; ++m) {
    out[m].method = cfg.methods[m];
    out[m].active = truth.active;
    out[m].covered = Vector::Zero(cfg.p);
    out[m].undefined = Vector::Zero(cfg.p);
  }

  std::vector<std::vector<Vector>> covered(cfg.n_y_replicates);
  std::vector<std::vector<Vector>> undefined(cfg.n_y_replicates);
  parallel_for(
      cfg.n_y_replicates,
      [&](int i) {
        Rng rng_inner = rng_outer.stream(100000 + i);
        Vector eps = rng_inner.normal_vector(cfg.n);
        Vector y = x * truth.beta + eps;
        Dataset data = with_response(st, y);
        covered[i].assign(n_methods, Vector::Zero(cfg.p));
        undefined[i].assign(n_methods, Vector::Zero(cfg.p));
        for (int m = 0; m < n_methods; ++m) {
          std::uint64_t seed = rng_inner.stream(50 + m).next_u64();
          try {
            InferenceResult res = run_method(cfg.methods[m], cfg, st, data, seed);
            for (int j = 0; j < cfg.p; ++j) {
              if (!res.ci_defined.empty() && !res.ci_defined[j]) {
                undefined[i][m][j] = 1.0;
                continue;
              }
              // the engines report on the original x scale; truth.beta is
              // already on that scale
              bool cover = res.ci_lower[j] <= truth.beta[j] &&
                           truth.beta[j] <= res.ci_upper[j];
              covered[i][m][j] = cover ? 1.0 : 0.0;
            }
          } catch (const std::exception&) {
            for (int j = 0; j < cfg.p; ++j) undefined[i][m][j] = 1.0;
          }
        }
      },
      cfg.threads);

  for (int i = 0; i < cfg.n_y_replicates; ++i) {
    for (int m = 0; m < n_methods; ++m) {
      out[m].covered += covered[i][m];
      out[m].undefined += undefined[i][m];
      ++out[m].n_replicates;
    }
  }
  for (int m = 0; m < n_methods; ++m) {
    out[m].n_replicates = cfg.n_y_replicates;
    double active_sum = 0.0;
    for (int j : truth.active)
      active_sum += out[m].covered[j] /
                    std::max(1.0, cfg.n_y_replicates - out[m].undefined[j]);
    out[m].active_coverage =
        truth.active.empty() ? 0.0 : active_sum / truth.active.size();
    double inactive_sum = 0.0;
    int count = 0;
    for (int j = 0; j < cfg.p; ++j) {
      if (truth.beta[j] != 0.0) continue;
      double defined = cfg.n_y_replicates - out[m].undefined[j];
      if (defined <= 0.0) continue;
      inactive_sum += out[m].covered[j] / defined;
      ++count;
    }
    out[m].inactive_coverage = count > 0 ? inactive_sum / count : 0.0;
  }
  return out;
}

}  // namespace hdinfer
