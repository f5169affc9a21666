#include "hdinfer/ols.hpp"

#include <cmath>

#include "hdinfer/distributions.hpp"

namespace hdinfer {

OlsSummary ols_low_dim_inference(const Matrix& x_sub, const Vector& y) {
  const Index n = x_sub.rows(), k = x_sub.cols();
  if (y.size() != n) throw DimensionError("ols: row count mismatch");
  if (n < k + 2) throw DimensionError("ols: need n >= p + 2 rows for a t-test");

  Matrix design(n, k + 1);
  design.col(0).setOnes();
  design.rightCols(k) = x_sub;

  Eigen::ColPivHouseholderQR<Matrix> qr(design);
  qr.setThreshold(1e-10);
  if (qr.rank() < k + 1) {
    // pivot order puts the dependent columns last
    std::vector<int> collinear;
    const auto& perm = qr.colsPermutation().indices();
    for (Index i = qr.rank(); i < k + 1; ++i) {
      int col = static_cast<int>(perm[i]);
      if (col > 0) collinear.push_back(col - 1);  // drop the intercept slot
    }
    std::sort(collinear.begin(), collinear.end());
    std::string msg = "ols: rank-deficient design, collinear columns:";
    for (int c : collinear) msg += " " + std::to_string(c);
    throw RankError(msg, collinear);
  }

  Vector coef = qr.solve(y);
  Vector resid = y - design * coef;
  double dof = static_cast<double>(n - k - 1);
  double rss = resid.squaredNorm();
  double sigma2 = rss / dof;

  Matrix xtx_inv = (design.transpose() * design)
                       .ldlt()
                       .solve(Matrix::Identity(k + 1, k + 1));

  OlsSummary out;
  out.estimate.resize(k);
  out.se.resize(k);
  out.t_stat.resize(k);
  out.p_value.resize(k);
  out.intercept = coef[0];
  out.sigma_hat = std::sqrt(sigma2);
  out.dof = dof;
  for (Index j = 0; j < k; ++j) {
    out.estimate[j] = coef[j + 1];
    double se = std::sqrt(sigma2 * xtx_inv(j + 1, j + 1));
    out.se[j] = se;
    if (se > 0.0) {
      out.t_stat[j] = out.estimate[j] / se;
      out.p_value[j] = student_t_two_sided_p(out.t_stat[j], dof);
    } else {
      // exact fit: zero residual, p-value underflows
      out.t_stat[j] = out.estimate[j] == 0.0
                          ? 0.0
                          : std::copysign(std::numeric_limits<double>::infinity(),
                                          out.estimate[j]);
      out.p_value[j] = out.estimate[j] == 0.0 ? 1.0 : 1e-300;
    }
  }
  return out;
}

}  // namespace hdinfer
