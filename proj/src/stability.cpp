#include "hdinfer/stability.hpp"

#include <algorithm>
#include <cmath>

#include "hdinfer/lasso.hpp"
#include "hdinfer/parallel.hpp"

namespace hdinfer {

SubsetSelector lasso_path_selector() {
  return [](const Dataset& subsample, int q, Rng) {
    Dataset sd = standardize_lenient(subsample);
    return lasso_path_first_entrants(sd, q);
  };
}

StabilityResult stability_select(const Dataset& data, double ev_target,
                                 double pi_thr, int n_subsamples,
                                 SubsetSelector selector, std::uint64_t seed,
                                 int threads) {
  if (!(ev_target > 0.0)) throw ConfigError("stability: ev_target must be positive");
  if (!(pi_thr > 0.5 && pi_thr <= 1.0))
    throw ConfigError("stability: pi_thr must lie in (0.5, 1]");
  if (n_subsamples < 1) throw ConfigError("stability: need at least one subsample");
  const Index n = data.n(), p = data.p();

  int q = static_cast<int>(std::floor(
      std::sqrt(ev_target * (2.0 * pi_thr - 1.0) * static_cast<double>(p))));
  if (q == 0)
    throw ConfigError("stability: ev_target too small for p (calibrated q is 0)");

  if (!selector) selector = lasso_path_selector();
  const int half = static_cast<int>(n) / 2;

  std::vector<std::vector<int>> picks(n_subsamples);
  Rng root(seed);
  parallel_for(
      n_subsamples,
      [&](int s) {
        Rng rng = root.stream(s);
        std::vector<int> rows = rng.sample_without_replacement(static_cast<int>(n), half);
        std::sort(rows.begin(), rows.end());
        std::vector<int> chosen = selector(subset_rows(data, rows), q, rng.stream(1));
        if (static_cast<int>(chosen.size()) > q)
          throw MethodError("stability selector returned more than q indices");
        std::vector<char> seen(p, 0);
        for (int j : chosen) {
          if (j < 0 || j >= p || seen[j])
            throw MethodError("stability selector returned an invalid index set");
          seen[j] = 1;
        }
        picks[s] = std::move(chosen);
      },
      threads);

  StabilityResult out;
  out.q = q;
  out.pi_thr = pi_thr;
  out.ev_target = ev_target;
  out.freq = Vector::Zero(p);
  for (const auto& chosen : picks)
    for (int j : chosen) out.freq[j] += 1.0;
  out.freq /= static_cast<double>(n_subsamples);
  for (Index j = 0; j < p; ++j)
    if (out.freq[j] >= pi_thr) out.select.push_back(static_cast<int>(j));
  return out;
}

}  // namespace hdinfer
