#include <doctest.h>

#include <cmath>
#include <set>

#include "hdinfer/result_io.hpp"
#include "hdinfer/simulation.hpp"
#include "test_util.hpp"

using namespace hdinfer;
using namespace testutil;

TEST_SUITE_BEGIN("simulation");

TEST_CASE("equicorrelated design hits its population moments") {
  ScenarioConfig cfg;
  cfg.design = DesignType::EquiCorr;
  cfg.n = 2000;
  cfg.p = 12;
  auto sampler = DesignSampler::prepare(cfg);
  Rng rng(1);
  Matrix x = sampler.sample(rng);
  Matrix corr = x.transpose() * x / static_cast<double>(cfg.n);
  for (Index j = 0; j < cfg.p; ++j)
    corr.col(j) /= std::sqrt(corr(j, j));  // crude normalization is fine here
  double off_sum = 0.0;
  int off_count = 0;
  for (Index j = 0; j < cfg.p; ++j)
    for (Index k = 0; k < cfg.p; ++k)
      if (j != k) {
        off_sum += corr(j, k);
        ++off_count;
      }
  CHECK(off_sum / off_count == doctest::Approx(0.8).epsilon(0.07));
}

TEST_CASE("toeplitz neighbours correlate at 0.9") {
  ScenarioConfig cfg;
  cfg.design = DesignType::Toeplitz;
  cfg.n = 4000;
  cfg.p = 8;
  auto sampler = DesignSampler::prepare(cfg);
  Rng rng(2);
  Matrix x = sampler.sample(rng);
  for (Index j = 0; j + 1 < cfg.p; ++j) {
    double c = x.col(j).dot(x.col(j + 1)) /
               std::sqrt(x.col(j).squaredNorm() * x.col(j + 1).squaredNorm());
    CHECK(c == doctest::Approx(0.9).epsilon(0.03));
  }
}

TEST_CASE("block design has independent blocks") {
  ScenarioConfig cfg;
  cfg.design = DesignType::BlockEquiCorr;
  cfg.n = 3000;
  cfg.p = 40;
  cfg.block_size = 20;
  cfg.rho = 0.6;
  auto sampler = DesignSampler::prepare(cfg);
  Rng rng(3);
  Matrix x = sampler.sample(rng);
  double within = x.col(0).dot(x.col(5)) / cfg.n;
  double across = x.col(0).dot(x.col(25)) / cfg.n;
  CHECK(within == doctest::Approx(0.6).epsilon(0.12));
  CHECK(std::fabs(across) < 0.06);
}

TEST_CASE("exp-decay design matches the inverted band covariance") {
  ScenarioConfig cfg;
  cfg.design = DesignType::ExpDecay;
  cfg.n = 4000;
  cfg.p = 10;
  auto sampler = DesignSampler::prepare(cfg);
  Rng rng(4);
  Matrix x = sampler.sample(rng);

  Matrix precision(cfg.p, cfg.p);
  for (int j = 0; j < cfg.p; ++j)
    for (int k = 0; k < cfg.p; ++k)
      precision(j, k) = std::pow(0.4, std::fabs(j - k) / 5.0);
  Matrix sigma = precision.llt().solve(Matrix::Identity(cfg.p, cfg.p));
  Matrix emp = x.transpose() * x / static_cast<double>(cfg.n);
  // entries of sigma are large (the band precision is near-singular), so
  // compare on the correlation scale
  for (Index j = 0; j < cfg.p; ++j) {
    for (Index k = 0; k < cfg.p; ++k) {
      double expect = sigma(j, k) / std::sqrt(sigma(j, j) * sigma(k, k));
      double got = emp(j, k) / std::sqrt(emp(j, j) * emp(k, k));
      CHECK(std::fabs(got - expect) < 0.05);
    }
  }
}

TEST_CASE("coefficient schemes") {
  ScenarioConfig cfg;
  cfg.p = 30;
  cfg.s0 = 3;
  cfg.coef_scheme = "fixed(2)";
  Rng rng(5);
  auto t = generate_coefficients(cfg, rng);
  CHECK(t.active.size() == 3);
  int n_two = 0;
  for (Index j = 0; j < cfg.p; ++j) {
    if (t.beta[j] != 0.0) {
      CHECK(t.beta[j] == 2.0);
      ++n_two;
    }
  }
  CHECK(n_two == 3);

  cfg.coef_scheme = "U(0,2)";
  for (int rep = 0; rep < 40; ++rep) {
    auto u = generate_coefficients(cfg, rng);
    for (int j : u.active) {
      CHECK(u.beta[j] >= 0.0);
      CHECK(u.beta[j] <= 2.0);
    }
  }
  CHECK_THROWS_AS(CoefScheme::parse("gamma(1,2)"), ConfigError);
}

TEST_CASE("random active positions are close to uniform") {
  ScenarioConfig cfg;
  cfg.p = 10;
  cfg.s0 = 1;
  cfg.coef_scheme = "fixed(1)";
  Rng rng(6);
  std::vector<int> counts(cfg.p, 0);
  const int draws = 5000;
  for (int i = 0; i < draws; ++i) {
    auto t = generate_coefficients(cfg, rng);
    counts[t.active[0]]++;
  }
  double expected = static_cast<double>(draws) / cfg.p;
  double chi_sq = 0.0;
  for (int c : counts) chi_sq += (c - expected) * (c - expected) / expected;
  // chi-square with 9 dof, 0.1% critical value is 27.88
  CHECK(chi_sq < 27.88);
}

TEST_CASE("rejection scoring handles oracles and level zero") {
  Vector truth(5);
  truth << 1.0, 0.0, 2.0, 0.0, 0.0;

  Vector oracle(5);
  oracle << 0.0, 1.0, 0.0, 1.0, 1.0;  // rejects exactly the active set
  auto s = score_rejections(oracle, 0.05, truth);
  CHECK(s.power_fraction == doctest::Approx(1.0));
  CHECK(s.v_count == 0);
  CHECK_FALSE(s.any_false);

  // level zero rejects nothing (p-values are floored above zero)
  Vector floor_p = Vector::Constant(5, 1e-300);
  auto z = score_rejections(floor_p, 0.0, truth);
  CHECK(z.power_fraction == 0.0);
  CHECK(z.v_count == 0);

  Vector mixed(5);
  mixed << 0.01, 0.02, 0.5, 1.0, 0.03;
  auto m = score_rejections(mixed, 0.05, truth);
  CHECK(m.power_fraction == doctest::Approx(0.5));
  CHECK(m.v_count == 2);
  CHECK(m.any_false);
}

TEST_CASE("scenario runs are reproducible and bookkeeping is consistent") {
  ScenarioConfig cfg;
  cfg.name = "tiny";
  cfg.design = DesignType::Toeplitz;
  cfg.n = 40;
  cfg.p = 20;
  cfg.s0 = 2;
  cfg.coef_scheme = "fixed(5)";
  cfg.n_outer_replicates = 2;
  cfg.n_y_replicates = 3;
  cfg.methods = {"ridge-proj"};
  cfg.multi_split_b = 5;
  cfg.seed = 99;
  cfg.threads = 1;

  auto a = run_scenario(cfg);
  auto b = run_scenario(cfg);
  REQUIRE(a.pooled.size() == 1);
  CHECK(a.pooled[0].fwer == b.pooled[0].fwer);
  CHECK(a.pooled[0].power == b.pooled[0].power);
  CHECK(a.pooled[0].avg_v == b.pooled[0].avg_v);
  REQUIRE(a.per_outer.size() == 2);
  for (std::size_t i = 0; i < a.per_outer.size(); ++i) {
    CHECK(a.per_outer[i].fwer == b.per_outer[i].fwer);
    CHECK(a.per_outer[i].power == b.per_outer[i].power);
    CHECK(a.per_outer[i].fwer >= 0.0);
    CHECK(a.per_outer[i].fwer <= 1.0);
    CHECK(a.per_outer[i].power >= 0.0);
    CHECK(a.per_outer[i].power <= 1.0);
    CHECK(a.per_outer[i].avg_v >= 0.0);
  }
  CHECK(a.pooled[0].failures == 0);
  // strong fixed(5) signals on an easy design: some power expected
  CHECK(a.pooled[0].power > 0.5);
}

TEST_CASE("coverage protocol counts undefined intervals separately") {
  ScenarioConfig cfg;
  cfg.design = DesignType::Toeplitz;
  cfg.n = 50;
  cfg.p = 25;
  cfg.s0 = 1;
  cfg.coef_scheme = "fixed(4)";
  cfg.positions = CoefPositions::FirstS0;
  cfg.n_y_replicates = 12;
  cfg.methods = {"ridge-proj", "multi-split"};
  cfg.multi_split_b = 8;
  cfg.seed = 7;
  cfg.threads = 1;
  cfg.mode = ScenarioMode::CiCoverage;

  auto res = run_scenario(cfg);
  REQUIRE(res.coverage.size() == 2);
  const auto& ridge = res.coverage[0];
  CHECK(ridge.method == "ridge-proj");
  CHECK(ridge.undefined.sum() == 0.0);  // ridge always draws an interval
  CHECK(ridge.inactive_coverage > 0.85);

  const auto& msplit = res.coverage[1];
  CHECK(msplit.method == "multi-split");
  // never-selected noise variables land in the undefined column
  CHECK(msplit.undefined.sum() > 0.0);
  for (Index j = 0; j < cfg.p; ++j)
    CHECK(msplit.covered[j] + msplit.undefined[j] <= cfg.n_y_replicates);
}

TEST_CASE("scenario config json round trip and validation errors") {
  ScenarioConfig cfg;
  cfg.name = "roundtrip";
  cfg.design = DesignType::BlockEquiCorr;
  cfg.rho = 0.35;
  cfg.p = 40;
  cfg.block_size = 20;
  cfg.coef_scheme = "U(0,4)";
  cfg.methods = {"lasso-proj"};
  std::string text = scenario_config_to_json(cfg);
  ScenarioConfig back = scenario_config_from_json(text);
  CHECK(back.name == cfg.name);
  CHECK(back.design == cfg.design);
  CHECK(back.rho == cfg.rho);
  CHECK(back.coef_scheme == cfg.coef_scheme);
  CHECK(back.methods == cfg.methods);

  CHECK_THROWS_AS(scenario_config_from_json("{\"design\": \"pentagon\"}"), ConfigError);
  CHECK_THROWS_AS(scenario_config_from_json("not json"), ConfigError);
  CHECK_THROWS_AS(scenario_config_from_json("{\"methods\": [\"oracle\"]}"), ConfigError);
}

TEST_SUITE_END();
