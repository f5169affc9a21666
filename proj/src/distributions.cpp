#include "hdinfer/distributions.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace hdinfer {

double normal_cdf(double x) { return 0.5 * std::erfc(-x * M_SQRT1_2); }

double normal_sf(double x) { return 0.5 * std::erfc(x * M_SQRT1_2); }

double normal_two_sided_p(double z) {
  double p = 2.0 * normal_sf(std::fabs(z));
  return p < 1e-300 ? 1e-300 : (p > 1.0 ? 1.0 : p);
}

// Wichura (1988), algorithm AS 241, double-precision variant.
double normal_quantile(double prob) {
  if (!(prob > 0.0 && prob < 1.0))
    throw std::domain_error("normal_quantile: prob must be in (0,1)");
  const double q = prob - 0.5;
  double r;
  if (std::fabs(q) <= 0.425) {
    r = 0.180625 - q * q;
    return q *
           (((((((2509.0809287301226727 * r + 33430.575583588128105) * r +
                 67265.770927008700853) *
                    r +
                45921.953931549871457) *
                   r +
               13731.693765509461125) *
                  r +
              1971.5909503065514427) *
                 r +
             133.14166789178437745) *
                r +
            3.387132872796366608) /
           (((((((5226.495278852545703 * r + 28729.085735721942674) * r +
                 39307.89580009271061) *
                    r +
                21213.794301586595867) *
                   r +
               5394.1960214247511077) *
                  r +
              687.1870074920579083) *
                 r +
             42.313330701600911252) *
                r +
            1.0);
  }
  r = q < 0.0 ? prob : 1.0 - prob;
  r = std::sqrt(-std::log(r));
  double val;
  if (r <= 5.0) {
    r -= 1.6;
    val = (((((((7.7454501427834140764e-4 * r + 0.0227238449892691845833) * r +
                0.24178072517745061177) *
                   r +
               1.27045825245236838258) *
                  r +
              3.64784832476320460504) *
                 r +
             5.7694972214606914055) *
                r +
            4.6303378461565452959) *
               r +
           1.42343711074968357734) /
          (((((((1.05075007164441684324e-9 * r + 5.475938084995344946e-4) * r +
                0.0151986665636164571966) *
                   r +
               0.14810397642748007459) *
                  r +
              0.68976733498510000455) *
                 r +
             1.6763848301838038494) *
                r +
            2.05319162663775882187) *
               r +
           1.0);
  } else {
    r -= 5.0;
    val = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                0.0012426609473880784386) *
                   r +
               0.026532189526576123093) *
                  r +
              0.29656057182850489123) *
                 r +
             1.7848265399172913358) *
                r +
            5.4637849111641143699) *
               r +
           6.6579046435011037772) /
          (((((((2.04426310338993978564e-15 * r + 1.4215117583164458887e-7) * r +
                1.8463183175100546818e-5) *
                   r +
               7.868691311456132591e-4) *
                  r +
              0.0148753612908506148525) *
                 r +
             0.13692988092273580531) *
                r +
            0.59983220655588793769) *
               r +
           1.0);
  }
  return q < 0.0 ? -val : val;
}

namespace {

// Continued fraction for the incomplete beta function (Lentz's method).
double betacf(double a, double b, double x) {
  const int max_iter = 300;
  const double eps = 3e-16;
  const double fpmin = 1e-300;
  double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < fpmin) d = fpmin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= max_iter; ++m) {
    int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < fpmin) d = fpmin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < fpmin) c = fpmin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < fpmin) d = fpmin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < fpmin) c = fpmin;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < eps) break;
  }
  return h;
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                    a * std::log(x) + b * std::log1p(-x);
  double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * betacf(a, b, x) / a;
  return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

double student_t_cdf(double t, double dof) {
  if (dof <= 0.0) throw std::domain_error("student_t_cdf: dof must be positive");
  if (t == 0.0) return 0.5;
  double x = dof / (dof + t * t);
  double tail = 0.5 * incomplete_beta(0.5 * dof, 0.5, x);
  return t > 0.0 ? 1.0 - tail : tail;
}

double student_t_two_sided_p(double t, double dof) {
  double x = dof / (dof + t * t);
  double p = incomplete_beta(0.5 * dof, 0.5, x);
  return p < 1e-300 ? 1e-300 : (p > 1.0 ? 1.0 : p);
}

double student_t_quantile(double prob, double dof) {
  if (!(prob > 0.0 && prob < 1.0))
    throw std::domain_error("student_t_quantile: prob must be in (0,1)");
  if (prob == 0.5) return 0.0;
  // Newton iterations started from the normal quantile, with a bisection
  // bracket as safety net for small dof.
  double lo = -1.0, hi = 1.0;
  while (student_t_cdf(lo, dof) > prob) lo *= 2.0;
  while (student_t_cdf(hi, dof) < prob) hi *= 2.0;
  double x = normal_quantile(prob);
  if (x < lo || x > hi) x = 0.5 * (lo + hi);
  for (int it = 0; it < 100; ++it) {
    double f = student_t_cdf(x, dof) - prob;
    if (f > 0.0)
      hi = x;
    else
      lo = x;
    // t density at x
    double ln_pdf = std::lgamma(0.5 * (dof + 1.0)) - std::lgamma(0.5 * dof) -
                    0.5 * std::log(dof * M_PI) -
                    0.5 * (dof + 1.0) * std::log1p(x * x / dof);
    double step = f / std::exp(ln_pdf);
    double next = x - step;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::fabs(next - x) < 1e-14 * (1.0 + std::fabs(x))) return next;
    x = next;
  }
  return x;
}

}  // namespace hdinfer
