// Tiny timing harness used while tuning the solver; not part of ctest.
#include <chrono>
#include <cstdio>

#include "hdinfer/desparsified_lasso.hpp"
#include "hdinfer/lasso.hpp"
#include "test_util.hpp"

using namespace hdinfer;
using namespace testutil;
using Clock = std::chrono::steady_clock;

static double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

int main(int argc, char**) {
  bool full = argc > 1;
  {
    Rng rng(1);
    Matrix x = toeplitz_design(100, 200, 0.9, rng);
    Vector beta0 = Vector::Zero(200);
    beta0[10] = 2.0;
    beta0[50] = 2.0;
    beta0[150] = 2.0;
    Vector y = x * beta0 + rng.normal_vector(100);
    Dataset d = standardize(make_dataset(x, y));

    auto t0 = Clock::now();
    auto cv = lasso_path_cv(d, rng.stream(1));
    std::printf("cv lasso n=100 p=200 (signal): %.1f ms, lambda=%g, |S|=%zu\n",
                ms_since(t0), cv.lambda_cv, cv.fit.support.size());

    t0 = Clock::now();
    auto sl = scaled_lasso_sigma(d);
    std::printf("scaled lasso: %.1f ms, sigma=%.3f\n", ms_since(t0), sl.second.sigma);
  }
  {
    Rng rng(2);
    Matrix x = toeplitz_design(50, 200, 0.9, rng);
    Vector y = rng.normal_vector(50);
    Dataset d = standardize(make_dataset(x, y));
    auto t0 = Clock::now();
    auto cv = lasso_path_cv(d, rng.stream(1));
    std::printf("cv lasso n=50 p=200 (null): %.1f ms, |S|=%zu\n", ms_since(t0),
                cv.fit.support.size());
  }
  if (full) {
    Rng rng(3);
    Matrix x = toeplitz_design(100, 200, 0.9, rng);
    Vector y = rng.normal_vector(100);
    Dataset d = standardize(make_dataset(x, y));
    auto t0 = Clock::now();
    auto comps = nodewise_lasso(d, {}, 5);
    std::printf("nodewise (zz) n=100 p=200: %.1f ms\n", ms_since(t0));
    t0 = Clock::now();
    NodewiseOptions cv_opts;
    cv_opts.tuning = NodewiseTuning::Cv;
    auto comps_cv = nodewise_lasso(d, cv_opts, 5);
    std::printf("nodewise (cv) n=100 p=200: %.1f ms\n", ms_since(t0));
  }
  return 0;
}
