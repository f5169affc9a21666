#include <doctest.h>

#include <cmath>
#include <numeric>

#include "hdinfer/distributions.hpp"
#include "hdinfer/multi_split.hpp"
#include "test_util.hpp"

using namespace hdinfer;
using namespace testutil;

namespace {

Screener fixed_screener(std::vector<int> sel, Index p) {
  return [sel, p](const Dataset&, Rng) {
    ScreenResult out;
    out.selected = sel;
    out.coef = Vector::Ones(p);
    return out;
  };
}

Dataset toy_data(Index n, Index p, const std::vector<int>& active, double strength,
                 std::uint64_t seed) {
  Rng rng(seed);
  Matrix x = toeplitz_design(n, p, 0.5, rng);
  Vector beta0 = Vector::Zero(p);
  for (int j : active) beta0[j] = strength;
  Vector y = x * beta0 + rng.normal_vector(n);
  return make_dataset(std::move(x), std::move(y));
}

}  // namespace

TEST_SUITE_BEGIN("multi_split");

TEST_CASE("empty selection leaves every p-value at one") {
  Dataset d = toy_data(40, 10, {}, 0.0, 1);
  auto rec = single_split(d, fixed_screener({}, 10), Rng(2));
  CHECK_FALSE(rec.failed);
  for (Index j = 0; j < 10; ++j) {
    CHECK(rec.p_raw[j] == 1.0);
    CHECK(rec.p_corr[j] == 1.0);
  }
}

TEST_CASE("unselected variables get raw p-value one, selected ones a bonferroni factor") {
  Dataset d = toy_data(60, 8, {1, 3}, 2.0, 3);
  auto rec = single_split(d, fixed_screener({1, 3, 5, 6}, 8), Rng(4));
  REQUIRE_FALSE(rec.failed);
  CHECK(rec.selected == std::vector<int>{1, 3, 5, 6});
  for (int j : {0, 2, 4, 7}) {
    CHECK(rec.p_raw[j] == 1.0);
    CHECK_FALSE(std::isfinite(rec.estimate[j]));
  }
  for (int j : {1, 3, 5, 6}) {
    CHECK(rec.p_corr[j] == doctest::Approx(std::min(1.0, rec.p_raw[j] * 4.0)));
    CHECK(std::isfinite(rec.estimate[j]));
    CHECK(std::isfinite(rec.se[j]));
  }
  CHECK(rec.dof == doctest::Approx(60 - 30 - 4 - 1));

  // split bookkeeping
  CHECK(rec.i1.size() == 30);
  CHECK(rec.i2.size() == 30);
  std::vector<int> all;
  all.insert(all.end(), rec.i1.begin(), rec.i1.end());
  all.insert(all.end(), rec.i2.begin(), rec.i2.end());
  std::sort(all.begin(), all.end());
  for (int i = 0; i < 60; ++i) CHECK(all[i] == i);
}

TEST_CASE("oversized screening is truncated with a flag") {
  Dataset d = toy_data(24, 40, {}, 0.0, 5);
  std::vector<int> too_many(30);
  std::iota(too_many.begin(), too_many.end(), 0);
  Rng coef_rng(6);
  auto screener = [&](const Dataset&, Rng) {
    ScreenResult out;
    out.selected = too_many;
    out.coef = coef_rng.normal_vector(40);
    return out;
  };
  auto rec = single_split(d, screener, Rng(7));
  CHECK(rec.truncated);
  CHECK(rec.selected.size() == 12);
}

TEST_CASE("aggregate: all-ones input stays at one") {
  Matrix pc = Matrix::Ones(17, 4);
  Vector out = aggregate(pc, {});
  for (Index j = 0; j < 4; ++j) CHECK(out[j] == doctest::Approx(1.0));
}

TEST_CASE("aggregate: single split closed form") {
  Matrix pc(1, 1);
  pc(0, 0) = 0.01;
  AggregationConfig cfg;
  cfg.gamma_min = 0.05;
  Vector out = aggregate(pc, cfg);
  CHECK(out[0] == doctest::Approx((1.0 - std::log(0.05)) * 0.01).epsilon(1e-12));
  CHECK(out[0] == doctest::Approx(0.0400).epsilon(1e-2));
}

TEST_CASE("aggregate: fixed-gamma median rule") {
  Matrix pc(3, 1);
  pc << 0.02, 0.1, 1.0;
  AggregationConfig cfg;
  cfg.fixed_gamma = 0.5;
  Vector out = aggregate(pc, cfg);
  CHECK(out[0] == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("aggregate: identical splits reduce to the single-split form") {
  for (double pval : {0.004, 0.07, 0.9}) {
    Matrix pc = Matrix::Constant(50, 1, pval);
    Vector out = aggregate(pc, {});
    double expect = std::min(1.0, (1.0 - std::log(0.05)) * pval);
    CHECK(out[0] == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("aggregate is monotone in every input") {
  Rng rng(8);
  for (int rep = 0; rep < 200; ++rep) {
    int n_splits = 1 + static_cast<int>(rng.uniform_index(30));
    Matrix pc(n_splits, 1);
    for (int b = 0; b < n_splits; ++b) pc(b, 0) = rng.uniform01();
    AggregationConfig cfg;
    if (rep % 3 == 0) cfg.fixed_gamma = 0.05 + 0.9 * rng.uniform01();
    double before = aggregate(pc, cfg)[0];
    int b = static_cast<int>(rng.uniform_index(n_splits));
    pc(b, 0) = pc(b, 0) + (1.0 - pc(b, 0)) * rng.uniform01();
    double after = aggregate(pc, cfg)[0];
    CHECK(after >= before - 1e-15);
  }
}

TEST_CASE("aggregate of independent uniforms is conservative") {
  Rng rng(9);
  const int reps = 4000, n_splits = 20;
  std::vector<double> agg(reps);
  AggregationConfig cfg;
  for (int r = 0; r < reps; ++r) {
    Matrix pc(n_splits, 1);
    for (int b = 0; b < n_splits; ++b) pc(b, 0) = rng.uniform01();
    agg[r] = aggregate(pc, cfg)[0];
  }
  for (double alpha : {0.01, 0.05, 0.1}) {
    double hit = 0;
    for (double v : agg) hit += (v <= alpha);
    hit /= reps;
    double mc_se = std::sqrt(alpha * (1 - alpha) / reps);
    CHECK(hit <= alpha + 2 * mc_se);
  }
}

TEST_CASE("multi-split finds strong signals and is seed-reproducible") {
  Dataset d = toy_data(80, 30, {4, 17}, 3.0, 10);
  AggregationConfig cfg;
  cfg.n_splits = 20;
  auto res1 = multi_split_inference(d, cfg, cv_lasso_screener(), 99);
  auto res2 = multi_split_inference(d, cfg, cv_lasso_screener(), 99);

  CHECK(res1.p_aggregated[4] < 0.05);
  CHECK(res1.p_aggregated[17] < 0.05);

  REQUIRE(res1.splits.size() == res2.splits.size());
  for (std::size_t b = 0; b < res1.splits.size(); ++b) {
    CHECK(res1.splits[b].i1 == res2.splits[b].i1);
    CHECK((res1.splits[b].p_corr - res2.splits[b].p_corr).cwiseAbs().maxCoeff() == 0.0);
  }
  CHECK((res1.p_aggregated - res2.p_aggregated).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("pipeline p-values are invariant under response scaling") {
  Dataset d = toy_data(70, 25, {3}, 2.5, 11);
  Dataset d_scaled = d;
  d_scaled.y *= 37.0;
  AggregationConfig cfg;
  cfg.n_splits = 12;
  auto a = multi_split_inference(d, cfg, cv_lasso_screener(), 5);
  auto b = multi_split_inference(d_scaled, cfg, cv_lasso_screener(), 5);
  CHECK((a.p_aggregated - b.p_aggregated).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("single-split confidence interval matches the adjusted t-interval") {
  Dataset d = toy_data(60, 8, {2}, 2.0, 12);
  AggregationConfig cfg;
  cfg.n_splits = 1;
  auto res = multi_split_inference(d, cfg, fixed_screener({2, 5}, 8), 13);
  REQUIRE(res.splits.size() == 1);
  const auto& rec = res.splits[0];

  double alpha = 0.05;
  double level_b = alpha * 1.0 / ((1.0 - std::log(0.05)) * 2.0);
  double t_crit = student_t_quantile(1.0 - level_b / 2.0, rec.dof);
  auto ci = multi_split_ci(res, 1.0 - alpha, 2);
  REQUIRE(ci.defined);
  CHECK(ci.lower == doctest::Approx(rec.estimate[2] - t_crit * rec.se[2]).epsilon(1e-4));
  CHECK(ci.upper == doctest::Approx(rec.estimate[2] + t_crit * rec.se[2]).epsilon(1e-4));
}

TEST_CASE("duality between aggregated p-values and intervals") {
  Dataset d = toy_data(80, 20, {0, 7}, 1.2, 14);
  AggregationConfig cfg;
  cfg.n_splits = 15;
  auto res = multi_split_inference(d, cfg, cv_lasso_screener(), 21);
  for (double level : {0.9, 0.95}) {
    double alpha = 1.0 - level;
    for (int j = 0; j < 20; ++j) {
      auto ci = multi_split_ci(res, level, j);
      if (!ci.defined) {
        // never-selected variables must not be significant either
        CHECK(res.p_aggregated[j] > alpha);
        continue;
      }
      bool zero_outside = (0.0 < ci.lower) || (0.0 > ci.upper);
      if (std::fabs(res.p_aggregated[j] - alpha) > 1e-6)
        CHECK(zero_outside == (res.p_aggregated[j] <= alpha));
    }
  }
}

TEST_CASE("undefined interval for a variable that is never selected") {
  Dataset d = toy_data(50, 10, {1}, 3.0, 15);
  AggregationConfig cfg;
  cfg.n_splits = 8;
  auto res = multi_split_inference(d, cfg, fixed_screener({1}, 10), 16);
  auto ci = multi_split_ci(res, 0.95, 7);
  CHECK_FALSE(ci.defined);
  CHECK_FALSE(res.ci_defined[7]);
  CHECK(res.ci_defined[1]);
}

TEST_CASE("excessive split failures abort with a rank diagnostic") {
  Rng rng(17);
  Matrix x(40, 6);
  for (int j = 0; j < 5; ++j) x.col(j) = rng.normal_vector(40);
  x.col(5) = x.col(2);  // exact duplicate
  Vector y = rng.normal_vector(40);
  Dataset d = make_dataset(std::move(x), std::move(y));
  AggregationConfig cfg;
  cfg.n_splits = 5;
  CHECK_THROWS_AS(
      multi_split_inference(d, cfg, fixed_screener({2, 5}, 6), 18),
      MethodError);
}

TEST_CASE("interval coverage of zero coefficients at desk scale") {
  // many response replicates on one fixed design; count how often the
  // aggregated intervals cover the true zero coefficients
  Rng rng(30);
  const Index n = 80, p = 60;
  Matrix x = toeplitz_design(n, p, 0.9, rng);
  Vector beta0 = Vector::Zero(p);
  beta0[0] = 1.8;
  beta0[1] = 1.0;
  beta0[2] = 0.5;

  int covered = 0, defined = 0;
  const int reps = 40;
  for (int r = 0; r < reps; ++r) {
    Rng rep_rng = rng.stream(r);
    Vector y = x * beta0 + rep_rng.normal_vector(n);
    Dataset d = make_dataset(x, y);
    AggregationConfig cfg;
    cfg.n_splits = 25;
    cfg.ci_level = 0.95;
    auto res = multi_split_inference(d, cfg, cv_lasso_screener(), 7000 + r);
    for (Index j = 3; j < p; ++j) {
      if (!res.ci_defined[j]) continue;
      ++defined;
      covered += (res.ci_lower[j] <= 0.0 && 0.0 <= res.ci_upper[j]);
    }
  }
  if (defined > 0) {
    double rate = static_cast<double>(covered) / defined;
    CHECK(rate >= 0.93);
  }
  // intervals for never-selected variables stay undefined rather than trivial
  CHECK(defined < reps * (p - 3));
}

TEST_SUITE_END();
