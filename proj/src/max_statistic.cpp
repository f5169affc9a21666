#include "hdinfer/max_statistic.hpp"

#include <algorithm>
#include <cmath>

#include "hdinfer/parallel.hpp"
#include "hdinfer/random.hpp"

namespace hdinfer {

GaussianMaxSampler factor_covariance(const Matrix& cov) {
  GaussianMaxSampler out;
  Matrix sym = 0.5 * (cov + cov.transpose());
  Eigen::LLT<Matrix> llt(sym);
  if (llt.info() == Eigen::Success) {
    out.factor = llt.matrixL();
    out.diagonal = sym.diagonal();
    return out;
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
  Vector evals = eig.eigenvalues().cwiseMax(0.0);
  out.factor = eig.eigenvectors() * evals.cwiseSqrt().asDiagonal();
  out.diagonal = (out.factor * out.factor.transpose()).diagonal();
  out.repaired = true;
  return out;
}

double mc_max_exceedance_pvalue(const GaussianMaxSampler& sampler,
                                const Vector& scale, const Vector& offset,
                                double observed, int n_mc, std::uint64_t seed,
                                int threads) {
  const Index g = sampler.factor.rows();
  if (scale.size() != g || offset.size() != g)
    throw DimensionError("mc_max_exceedance_pvalue: size mismatch");
  const int chunk = 2048;
  const int n_chunks = (n_mc + chunk - 1) / chunk;
  std::vector<long> counts(n_chunks, 0);
  Rng root(seed);
  parallel_for(
      n_chunks,
      [&](int c) {
        Rng rng = root.stream(c);
        const Index m = std::min(chunk, n_mc - c * chunk);
        Matrix xi(g, m);
        for (Index col = 0; col < m; ++col)
          for (Index row = 0; row < g; ++row) xi(row, col) = rng.normal();
        Matrix w = sampler.factor * xi;
        long hits = 0;
        for (Index col = 0; col < m; ++col) {
          double stat = 0.0;
          for (Index row = 0; row < g; ++row)
            stat = std::max(stat, scale[row] * std::fabs(w(row, col)) + offset[row]);
          hits += (stat >= observed);
        }
        counts[c] = hits;
      },
      threads);
  long total = 0;
  for (long h : counts) total += h;
  return (1.0 + static_cast<double>(total)) / (static_cast<double>(n_mc) + 1.0);
}

}  // namespace hdinfer
