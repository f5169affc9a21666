#include <doctest.h>

#include <cmath>
#include <numeric>

#include "hdinfer/desparsified_lasso.hpp"
#include "hdinfer/distributions.hpp"
#include "hdinfer/ols.hpp"
#include "test_util.hpp"

using namespace hdinfer;
using namespace testutil;

namespace {

double soft(double z, double t) {
  if (z > t) return z - t;
  if (z < -t) return z + t;
  return 0.0;
}

}  // namespace

TEST_SUITE_BEGIN("desparsified");

TEST_CASE("orthonormal design: projections vanish and omega is the identity") {
  Rng rng(1);
  const Index n = 120, p = 10;
  Matrix x = orthonormal_design(n, p, rng);
  Vector y = x.col(2) * 2.0 + rng.normal_vector(n);
  Dataset d = as_standardized(x, y);

  auto comps = nodewise_lasso(d, {}, 7);
  for (Index j = 0; j < p; ++j) {
    CHECK_FALSE(comps.degenerate[j]);
    CHECK((comps.z.col(j) - d.x.col(j)).cwiseAbs().maxCoeff() < 1e-7);
    for (Index k = 0; k < p; ++k) {
      if (k != j) CHECK(std::fabs(comps.proj(j, k)) < 1e-7);
      CHECK(comps.omega(j, k) == doctest::Approx(j == k ? 1.0 : 0.0).epsilon(1e-6));
    }
  }

  // bias correction is exactly zero here: b equals the raw projection
  auto res = desparsified_inference(d, comps, NoiseEstimate{1.0, NoiseMethod::Fixed}, 7);
  for (Index j = 0; j < p; ++j) {
    double raw = d.y.dot(comps.z.col(j)) / comps.denom[j];
    CHECK(res.b[j] == doctest::Approx(raw).epsilon(1e-9));
  }
}

TEST_CASE("two correlated columns match the explicit residual computation") {
  Rng rng(2);
  const Index n = 200;
  Matrix x = equicorr_design(n, 2, 0.6, rng);
  Vector y = rng.normal_vector(n);
  Dataset d = standardize(make_dataset(x, y));

  auto comps = nodewise_lasso(d, {}, 3);
  double rho = d.x.col(0).dot(d.x.col(1)) / static_cast<double>(n);
  double lam = comps.lambda_j[0] / 2.0;  // solver convention
  double gamma = soft(rho, lam);
  double expect_p01 = (rho - gamma) / (1.0 - gamma * rho);
  CHECK(comps.proj(0, 1) == doctest::Approx(expect_p01).epsilon(1e-6));
}

TEST_CASE("zz tuning never exceeds the cv penalty") {
  Rng rng(3);
  const Index n = 60, p = 25;
  Matrix x = toeplitz_design(n, p, 0.8, rng);
  Vector y = rng.normal_vector(n);
  Dataset d = standardize(make_dataset(x, y));

  NodewiseOptions cv_opts;
  cv_opts.tuning = NodewiseTuning::Cv;
  NodewiseOptions zz_opts;
  zz_opts.tuning = NodewiseTuning::Zz;
  auto comps_cv = nodewise_lasso(d, cv_opts, 11);
  auto comps_zz = nodewise_lasso(d, zz_opts, 11);
  for (Index j = 0; j < p; ++j)
    CHECK(comps_zz.lambda_j[j] <= comps_cv.lambda_j[j] + 1e-12);
}

TEST_CASE("stored residuals satisfy the nodewise kkt bound") {
  Rng rng(4);
  const Index n = 50, p = 30;
  Matrix x = toeplitz_design(n, p, 0.9, rng);
  Vector y = rng.normal_vector(n);
  Dataset d = standardize(make_dataset(x, y));
  for (auto tuning : {NodewiseTuning::Cv, NodewiseTuning::Zz}) {
    NodewiseOptions opts;
    opts.tuning = tuning;
    auto comps = nodewise_lasso(d, opts, 5);
    CHECK(nodewise_kkt_violation(d, comps) < 1e-4);
  }
}

TEST_CASE("omega is symmetric positive semidefinite") {
  Rng rng(5);
  const Index n = 40, p = 20;
  Matrix x = equicorr_design(n, p, 0.5, rng);
  Vector y = rng.normal_vector(n);
  Dataset d = standardize(make_dataset(x, y));
  auto comps = nodewise_lasso(d, {}, 6);
  CHECK((comps.omega - comps.omega.transpose()).cwiseAbs().maxCoeff() < 1e-8);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(comps.omega);
  CHECK(eig.eigenvalues().minCoeff() > -1e-8);
}

TEST_CASE("vanishing regularization reduces to classical z-tests") {
  Rng rng(6);
  const Index n = 200, p = 5;
  Matrix x = toeplitz_design(n, p, 0.5, rng);
  Vector beta0(p);
  beta0 << 0.3, 0.0, -0.2, 0.0, 0.1;
  Vector y = x * beta0 + rng.normal_vector(n);
  Dataset d = make_dataset(x, y);
  Dataset sd = standardize(d);

  NodewiseOptions nw;
  nw.tuning = NodewiseTuning::FixedLambda;
  nw.fixed_lambda = 0.0;
  auto comps = nodewise_lasso(sd, nw, 8);

  // classical fit on the same standardized data
  auto ols = ols_low_dim_inference(sd.x, sd.y);
  NoiseEstimate fixed_sigma{ols.sigma_hat, NoiseMethod::Fixed};
  DesparsOptions opts;
  opts.correction_lambda = 0.0;
  auto res = desparsified_inference(sd, comps, fixed_sigma, 8, opts);

  for (Index j = 0; j < p; ++j) {
    CHECK(res.b[j] == doctest::Approx(ols.estimate[j]).epsilon(1e-6));
    double z = ols.estimate[j] / ols.se[j];
    CHECK(res.p_raw[j] == doctest::Approx(normal_two_sided_p(z)).epsilon(1e-5));
  }
}

TEST_CASE("adding a fitted direction shifts the estimate and keeps the scale") {
  NoiseEstimate sigma{1.0, NoiseMethod::Fixed};
  const int j = 7;

  // orthonormal design: the shift is exact up to solver tolerance
  {
    Rng rng(7);
    const Index n = 90, p = 12;
    Matrix x = orthonormal_design(n, p, rng);
    Vector y = rng.normal_vector(n);
    Dataset d = as_standardized(x, y);
    DesparsOptions opts;
    opts.correction_lambda = 0.1;
    auto r1 = lasso_projection(d, 13, {}, opts, sigma);
    Dataset shifted = d;
    shifted.y += 2.5 * d.x.col(j);
    auto r2 = lasso_projection(shifted, 13, {}, opts, sigma);
    CHECK(r2.report.estimate[j] - r1.report.estimate[j] ==
          doctest::Approx(2.5).epsilon(1e-7));
    CHECK(r2.report.se[j] == doctest::Approx(r1.report.se[j]).epsilon(1e-12));
  }

  // correlated design: the correction fit absorbs part of the shift, so the
  // identity is only approximate
  {
    Rng rng(17);
    const Index n = 80, p = 30;
    Matrix x = toeplitz_design(n, p, 0.5, rng);
    Vector y = rng.normal_vector(n);
    Dataset d = make_dataset(x, y);
    DesparsOptions opts;
    opts.correction_lambda = 0.15;
    auto r1 = lasso_projection(d, 13, {}, opts, sigma);
    Dataset shifted = d;
    shifted.y += 2.5 * d.x.col(j);
    auto r2 = lasso_projection(shifted, 13, {}, opts, sigma);
    CHECK(r2.report.estimate[j] - r1.report.estimate[j] ==
          doctest::Approx(2.5).epsilon(0.02));
    CHECK(r2.report.se[j] == doctest::Approx(r1.report.se[j]).epsilon(1e-12));
  }
}

TEST_CASE("singleton group test agrees with the individual p-value") {
  Rng rng(8);
  const Index n = 70, p = 15;
  Matrix x = toeplitz_design(n, p, 0.5, rng);
  Vector beta0 = Vector::Zero(p);
  beta0[4] = 0.8;
  Vector y = x * beta0 + rng.normal_vector(n);
  Dataset d = make_dataset(x, y);

  auto res = lasso_projection(d, 21);
  auto comps = nodewise_lasso(standardize(d), {}, 21);
  for (int j : {4, 9}) {
    auto group = despars_group_test(res, comps, {j}, 20000, 33);
    double mc_se = std::sqrt(res.p_raw[j] * (1.0 - res.p_raw[j]) / 20000.0);
    CHECK(std::fabs(group.p_value - res.p_raw[j]) < 4.0 * mc_se + 2e-4);
  }
}

TEST_CASE("observed max statistic grows under group inclusion") {
  Rng rng(9);
  const Index n = 60, p = 12;
  Matrix x = toeplitz_design(n, p, 0.4, rng);
  Vector y = x.col(3) * 1.5 + rng.normal_vector(n);
  Dataset d = make_dataset(x, y);
  auto res = lasso_projection(d, 5);

  auto stat = [&](const std::vector<int>& g) {
    double m = 0.0;
    for (int j : g) m = std::max(m, std::fabs(res.b[j]) / res.se[j]);
    return m;
  };
  std::vector<int> small_group = {2, 3}, big_group = {1, 2, 3, 4, 8};
  CHECK(stat(big_group) >= stat(small_group));

  // with the maximizing variable inside both groups, the wider null max can
  // only push the p-value up
  auto comps = nodewise_lasso(standardize(d), {}, 5);
  auto p_small = despars_group_test(res, comps, small_group, 20000, 40);
  auto p_big = despars_group_test(res, comps, big_group, 20000, 40);
  CHECK(p_big.p_value >= p_small.p_value - 0.02);
}

TEST_CASE("null whole-group p-values look uniform across replicates") {
  const int reps = 80;
  std::vector<double> pvals;
  for (int rep = 0; rep < reps; ++rep) {
    Rng rng(600 + rep);
    const Index n = 50, p = 25;
    Matrix x = toeplitz_design(n, p, 0.5, rng);
    Vector y = rng.normal_vector(n);
    Dataset d = standardize(make_dataset(x, y));
    NodewiseOptions nw;  // fixed penalties keep this null study cheap
    nw.tuning = NodewiseTuning::FixedLambda;
    nw.fixed_lambda = 0.5 * std::sqrt(2.0 * std::log(static_cast<double>(p)) / n);
    auto comps = nodewise_lasso(d, nw, 900 + rep);
    DesparsOptions opts;
    opts.correction_lambda = nw.fixed_lambda;
    auto res = desparsified_inference(
        d, comps, NoiseEstimate{1.0, NoiseMethod::Fixed}, 900 + rep, opts);
    std::vector<int> all(p);
    std::iota(all.begin(), all.end(), 0);
    pvals.push_back(despars_group_test(res, comps, all, 10000, 77 + rep).p_value);
  }
  CHECK(ks_uniform(pvals) < ks_critical(0.01, static_cast<double>(reps)));
}

TEST_CASE("bias diagnostic flags dense truths and stays quiet on sparse ones") {
  Rng rng(10);

  Matrix x_dense = toeplitz_design(120, 240, 0.2, rng);
  Vector beta_dense = Vector::Constant(240, 0.5);
  Vector y_dense = x_dense * beta_dense + rng.normal_vector(120);
  Dataset dense = make_dataset(x_dense, y_dense);
  auto res_dense = lasso_projection(dense, 31);
  int flagged_dense = 0;
  for (bool f : res_dense.bias_flag) flagged_dense += f;

  Matrix x_sparse = toeplitz_design(200, 100, 0.2, rng);
  Vector beta_sparse = Vector::Zero(100);
  beta_sparse[3] = 1.0;
  beta_sparse[40] = 1.0;
  beta_sparse[77] = 1.0;
  Vector y_sparse = x_sparse * beta_sparse + rng.normal_vector(200);
  Dataset sparse = make_dataset(x_sparse, y_sparse);
  auto res_sparse = lasso_projection(sparse, 32);
  int flagged_sparse = 0;
  for (bool f : res_sparse.bias_flag) flagged_sparse += f;

  CHECK(flagged_dense >= 240 / 3);
  CHECK(flagged_sparse <= 100 / 10);
}

TEST_SUITE_END();
