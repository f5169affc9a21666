#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "hdinfer/random.hpp"

using namespace hdinfer;

TEST_SUITE_BEGIN("random");

TEST_CASE("fixed seed reproduces the stream") {
  Rng a(42), b(42);
  for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("distinct streams differ") {
  Rng base(7);
  Rng s1 = base.stream(1), s2 = base.stream(2);
  int same = 0;
  for (int i = 0; i < 64; ++i) same += (s1.next_u64() == s2.next_u64());
  CHECK(same == 0);
}

TEST_CASE("uniform01 lies strictly inside (0,1) and has sane moments") {
  Rng rng(123);
  double sum = 0.0, sum_sq = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    double u = rng.uniform01();
    CHECK(u > 0.0);
    CHECK(u < 1.0);
    sum += u;
    sum_sq += u * u;
  }
  CHECK(sum / n == doctest::Approx(0.5).epsilon(0.01));
  CHECK(sum_sq / n == doctest::Approx(1.0 / 3.0).epsilon(0.01));
}

TEST_CASE("normal draws match N(0,1) moments") {
  Rng rng(99);
  const int n = 200000;
  double sum = 0.0, sum_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    double z = rng.normal();
    sum += z;
    sum_sq += z * z;
  }
  CHECK(std::fabs(sum / n) < 0.01);
  CHECK(sum_sq / n == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("uniform_index covers the range without bias") {
  Rng rng(5);
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 70000; ++i) counts[rng.uniform_index(7)]++;
  for (int c : counts) CHECK(std::fabs(c - 10000) < 500);
}

TEST_CASE("sample_without_replacement gives distinct indices") {
  Rng rng(11);
  auto s = rng.sample_without_replacement(50, 25);
  CHECK(s.size() == 25);
  std::set<int> uniq(s.begin(), s.end());
  CHECK(uniq.size() == 25);
  for (int v : s) {
    CHECK(v >= 0);
    CHECK(v < 50);
  }
}

TEST_SUITE_END();
