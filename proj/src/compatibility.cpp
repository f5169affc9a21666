#include "hdinfer/compatibility.hpp"

#include <cmath>

namespace hdinfer {

CompatibilityDiagnostic compatibility_diagnostic(const Dataset& data,
                                                 const std::vector<int>& support,
                                                 int n_draws, Rng rng) {
  if (support.empty()) throw ConfigError("compatibility: support must be nonempty");
  if (n_draws < 100) throw ConfigError("compatibility: need at least 100 draws");
  Dataset sd = standardize(data);
  const Index p = sd.p();
  const int s0 = static_cast<int>(support.size());
  for (int j : support)
    if (j < 0 || j >= p) throw ConfigError("compatibility: support index out of range");

  std::vector<char> in_support(p, 0);
  for (int j : support) in_support[j] = 1;
  std::vector<int> complement;
  complement.reserve(p - s0);
  for (Index j = 0; j < p; ++j)
    if (!in_support[j]) complement.push_back(static_cast<int>(j));

  const double n = static_cast<double>(sd.n());
  double best = std::numeric_limits<double>::infinity();
  Vector beta(p);
  for (int d = 0; d < n_draws; ++d) {
    beta.setZero();
    double l1_s = 0.0;
    for (int j : support) {
      beta[j] = rng.normal();
      l1_s += std::fabs(beta[j]);
    }
    if (l1_s <= 0.0) continue;
    // half the draws stay on the support; the rest spread a random amount of
    // l1 mass (up to the cone limit 3 ||beta_S||_1) over a sparse subset of
    // the complement
    if (!complement.empty() && d % 2 == 1) {
      double mass = 3.0 * l1_s * rng.uniform01();
      int k = 1 + static_cast<int>(rng.uniform_index(
                  std::min<std::uint64_t>(complement.size(), 2 * s0 + 1)));
      auto picks = rng.sample_without_replacement(static_cast<int>(complement.size()), k);
      Vector weights(k);
      double total = 0.0;
      for (int i = 0; i < k; ++i) {
        weights[i] = -std::log(rng.uniform01());
        total += weights[i];
      }
      for (int i = 0; i < k; ++i) {
        double sign = rng.uniform01() < 0.5 ? -1.0 : 1.0;
        beta[complement[picks[i]]] = sign * mass * weights[i] / total;
      }
    }
    double quad = (sd.x * beta).squaredNorm() / n;  // beta' Sigma_hat beta
    double value = static_cast<double>(s0) * quad / (l1_s * l1_s);
    best = std::min(best, value);
  }

  CompatibilityDiagnostic out;
  out.phi0_sq = best;
  out.n_draws = n_draws;
  return out;
}

}  // namespace hdinfer
