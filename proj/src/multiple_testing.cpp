#include "hdinfer/multiple_testing.hpp"

#include <algorithm>
#include <numeric>

namespace hdinfer {

Adjustment adjustment_from_string(const std::string& name) {
  if (name == "bonferroni") return Adjustment::Bonferroni;
  if (name == "holm") return Adjustment::Holm;
  if (name == "benjamini-yekutieli" || name == "BY" || name == "by")
    return Adjustment::BenjaminiYekutieli;
  throw ConfigError("unknown p-value adjustment: " + name);
}

std::string to_string(Adjustment a) {
  switch (a) {
    case Adjustment::Bonferroni: return "bonferroni";
    case Adjustment::Holm: return "holm";
    case Adjustment::BenjaminiYekutieli: return "benjamini-yekutieli";
  }
  return "unknown";
}

Vector adjust_pvalues(const Vector& p, Adjustment method) {
  const Index m = p.size();
  for (Index i = 0; i < m; ++i)
    if (!(p[i] >= 0.0 && p[i] <= 1.0))
      throw ConfigError("p-values must lie in [0,1]");
  Vector out(m);
  if (m == 0) return out;

  std::vector<Index> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](Index a, Index b) { return p[a] < p[b]; });

  switch (method) {
    case Adjustment::Bonferroni:
      for (Index i = 0; i < m; ++i) out[i] = std::min(1.0, p[i] * static_cast<double>(m));
      break;
    case Adjustment::Holm: {
      // step-down: running max of (m - k) * p_(k)
      double running = 0.0;
      for (Index k = 0; k < m; ++k) {
        double v = std::min(1.0, static_cast<double>(m - k) * p[order[k]]);
        running = std::max(running, v);
        out[order[k]] = running;
      }
      break;
    }
    case Adjustment::BenjaminiYekutieli: {
      double cm = 0.0;
      for (Index i = 1; i <= m; ++i) cm += 1.0 / static_cast<double>(i);
      // step-up: running min of c(m) * m / k * p_(k), from the largest down
      double running = 1.0;
      for (Index k = m; k >= 1; --k) {
        double v = std::min(
            1.0, cm * static_cast<double>(m) / static_cast<double>(k) * p[order[k - 1]]);
        running = std::min(running, v);
        out[order[k - 1]] = running;
      }
      break;
    }
  }
  return out;
}

}  // namespace hdinfer
