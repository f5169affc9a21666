#pragma once

namespace hdinfer {

/// Standard normal CDF.
double normal_cdf(double x);

/// Standard normal upper tail P(Z > x), accurate far into the tail.
double normal_sf(double x);

/// Standard normal quantile (inverse CDF), Wichura's AS 241 algorithm.
double normal_quantile(double prob);

/// Two-sided normal p-value for statistic z.
double normal_two_sided_p(double z);

/// Student-t CDF with `dof` degrees of freedom (via incomplete beta).
double student_t_cdf(double t, double dof);

/// Two-sided t-test p-value, floored at 1e-300.
double student_t_two_sided_p(double t, double dof);

/// Student-t quantile (inverse CDF).
double student_t_quantile(double prob, double dof);

/// Regularized incomplete beta function I_x(a, b).
double incomplete_beta(double a, double b, double x);

}  // namespace hdinfer
