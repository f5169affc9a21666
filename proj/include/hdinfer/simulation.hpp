#pragma once

#include <optional>
#include <string>

#include "hdinfer/random.hpp"
#include "hdinfer/types.hpp"

namespace hdinfer {

enum class DesignType { Toeplitz, ExpDecay, EquiCorr, BlockEquiCorr, RealX };
enum class CoefPositions { Random, FirstS0 };
enum class ScenarioMode { PValues, CiCoverage, GroupExperiment };

DesignType design_from_string(const std::string& name);
std::string to_string(DesignType d);
ScenarioMode mode_from_string(const std::string& name);
std::string to_string(ScenarioMode m);

/// Coefficient magnitude scheme: "U(a,b)" or "fixed(v)".
struct CoefScheme {
  bool is_fixed = true;
  double value = 1.0;
  double lo = 0.0, hi = 1.0;

  static CoefScheme parse(const std::string& text);
  std::string str() const;
  double draw(Rng& rng) const;
};

struct ScenarioConfig {
  std::string name = "scenario";
  DesignType design = DesignType::Toeplitz;
  double rho = 0.8;     // block-equi-corr off-diagonal
  int block_size = 20;  // block-equi-corr block width
  std::string real_x_file;
  int n = 100;
  int p = 200;
  int s0 = 3;
  std::string coef_scheme = "fixed(1)";
  CoefPositions positions = CoefPositions::Random;
  int n_y_replicates = 100;
  int n_outer_replicates = 50;
  double alpha = 0.05;
  double ci_level = 0.95;
  std::vector<std::string> methods = {"ridge-proj", "lasso-proj", "multi-split"};
  std::string lasso_proj_tuning = "zz";  // or "cv"
  int multi_split_b = 50;
  int group_n_mc = 10000;
  ScenarioMode mode = ScenarioMode::PValues;
  std::uint64_t seed = 1;
  int threads = 0;

  void validate() const;
};

/// Samples design matrices with rows i.i.d. N(0, Sigma) for the simulated
/// covariance models; `prepare` factors Sigma once.  RealX designs are fixed
/// and returned as-is.
class DesignSampler {
 public:
  static DesignSampler prepare(const ScenarioConfig& cfg);
  Matrix sample(Rng& rng) const;

 private:
  DesignType type_;
  int n_ = 0, p_ = 0, block_ = 20;
  double rho_ = 0.8;
  Matrix chol_;    // exp-decay factor
  Matrix real_x_;  // fixed design
};

/// Loads a CSV (header row required) and keeps the p columns with the
/// highest empirical variance.
Matrix load_real_design(const std::string& path, int n, int p);

struct TrueCoefficients {
  Vector beta;              // length p
  std::vector<int> active;  // sorted S0
};

TrueCoefficients generate_coefficients(const ScenarioConfig& cfg, Rng& rng);

/// Rejection bookkeeping for one replicate: rejected = adjusted p <= alpha.
struct ReplicateScore {
  bool any_false = false;    // at least one rejection outside the truth
  int v_count = 0;           // number of false rejections
  double power_fraction = 0; // share of active variables rejected
};

ReplicateScore score_rejections(const Vector& p_adjusted, double alpha,
                                const Vector& beta_truth);

/// Empirical error/power metrics per method, pooled over all replicates.
struct MethodMetrics {
  std::string method;
  double power = 0.0;  // sum over S0 of rejection rates, divided by s0
  double fwer = 0.0;   // share of replicates with a false rejection
  double avg_v = 0.0;  // mean count of false rejections
  int failures = 0;    // replicates where the method errored
  int n_runs = 0;
  double runtime_seconds = 0.0;
};

/// One row per (method, outer replicate), averaged over the inner
/// y-replicates: the "one data point per simulation" bookkeeping.
struct OuterMetrics {
  std::string method;
  int outer = 0;
  double power = 0.0, fwer = 0.0, avg_v = 0.0;
  int failures = 0;
};

/// Group-experiment rejection rates (block designs).
struct GroupMetrics {
  std::string method;
  double reject_root = 0.0;         // G = {1..p}
  double reject_block_union = 0.0;  // blocks containing active variables
  double reject_s0 = 0.0;           // G = S0
  double reject_s0c = 0.0;          // G = S0^c (type-I measure)
  int n_runs = 0;
  int failures = 0;
};

/// Per-coefficient interval coverage counts on one fixed (X, beta) pair.
struct CoverageCounts {
  std::string method;
  std::vector<int> active;     // S0
  Vector covered;              // length p, counts over the y replicates
  Vector undefined;            // length p, intervals that were not drawn
  int n_replicates = 0;
  double active_coverage = 0.0;    // mean coverage rate over S0
  double inactive_coverage = 0.0;  // mean coverage rate over S0^c (defined CIs)
};

struct ScenarioResult {
  ScenarioConfig config;
  std::vector<MethodMetrics> pooled;
  std::vector<OuterMetrics> per_outer;
  std::vector<GroupMetrics> groups;      // GroupExperiment mode
  std::vector<CoverageCounts> coverage;  // CiCoverage mode
  double wall_seconds = 0.0;
};

/// Runs the configured protocol: fresh X/beta/active-set per outer
/// replicate, fresh noise per inner replicate, deterministic given the seed.
/// Method failures on single replicates are counted, not fatal.
ScenarioResult run_scenario(const ScenarioConfig& cfg);

/// The interval-coverage protocol on one fixed (X, beta) draw.
std::vector<CoverageCounts> ci_coverage_protocol(const ScenarioConfig& cfg);

}  // namespace hdinfer
