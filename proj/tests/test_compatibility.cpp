#include <doctest.h>

#include "hdinfer/compatibility.hpp"
#include "test_util.hpp"

using namespace hdinfer;
using namespace testutil;

TEST_SUITE_BEGIN("compatibility");

TEST_CASE("identity gram matrix has constant at least one") {
  Rng rng(1);
  Matrix x = orthonormal_design(60, 10, rng);
  Vector y = rng.normal_vector(60);
  Dataset d = as_standardized(x, y);
  for (auto support : {std::vector<int>{0}, std::vector<int>{1, 4, 7}}) {
    auto diag = compatibility_diagnostic(d, support, 2000, rng.stream(3));
    CHECK(diag.phi0_sq >= 1.0 - 1e-9);
    CHECK(diag.heuristic);
  }
}

TEST_CASE("duplicated support column drives the diagnostic to zero") {
  Rng rng(2);
  Matrix x(50, 6);
  for (int j = 0; j < 5; ++j) x.col(j) = rng.normal_vector(50);
  x.col(5) = x.col(0);
  Vector y = rng.normal_vector(50);
  Dataset d = make_dataset(x, y);
  auto small_search = compatibility_diagnostic(d, {0, 5}, 200, rng.stream(1));
  auto big_search = compatibility_diagnostic(d, {0, 5}, 40000, rng.stream(1));
  CHECK(big_search.phi0_sq <= small_search.phi0_sq);
  CHECK(big_search.phi0_sq < 0.05);
}

TEST_CASE("equicorrelated design gives a positive, reproducible value") {
  Rng rng(3);
  Matrix x = equicorr_design(200, 20, 0.8, rng);
  Vector y = rng.normal_vector(200);
  Dataset d = make_dataset(x, y);
  auto a = compatibility_diagnostic(d, {0, 5, 12}, 5000, Rng(77));
  auto b = compatibility_diagnostic(d, {0, 5, 12}, 5000, Rng(77));
  CHECK(a.phi0_sq == b.phi0_sq);
  CHECK(a.phi0_sq > 0.0);
}

TEST_CASE("input validation") {
  Rng rng(4);
  Matrix x = equicorr_design(30, 5, 0.5, rng);
  Vector y = rng.normal_vector(30);
  Dataset d = make_dataset(x, y);
  CHECK_THROWS_AS(compatibility_diagnostic(d, {}, 500, rng), ConfigError);
  CHECK_THROWS_AS(compatibility_diagnostic(d, {0}, 50, rng), ConfigError);
}

TEST_SUITE_END();
