#include "nonstat/beta.hpp"

#include <cmath>
#include <sstream>

#include "nonstat/errors.hpp"

namespace nonstat {

double log_beta(double p, double q) {
  return std::lgamma(p) + std::lgamma(q) - std::lgamma(p + q);
}

namespace {

// Lentz's method for the incomplete beta continued fraction.
double beta_cf(double x, double p, double q) {
  const int max_iter = 500;
  const double eps = 1e-16;
  const double tiny = 1e-300;

  double qab = p + q;
  double qap = p + 1.0;
  double qam = p - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= max_iter; ++m) {
    int m2 = 2 * m;
    double aa = m * (q - m) * x / ((qam + m2) * (p + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(p + m) * (qab + m) * x / ((p + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < eps) break;
  }
  return h;
}

}  // namespace

double reg_inc_beta(double x, double p, double q) {
  if (!(p > 0) || !(q > 0)) throw ValidationError("reg_inc_beta: p,q must be positive");
  if (x < 0.0 || x > 1.0) throw ValidationError("reg_inc_beta: x must be in [0,1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  double front = std::exp(p * std::log(x) + q * std::log1p(-x) - log_beta(p, q));
  if (x < p / (p + q)) {
    return front * beta_cf(x, p, q) / p;
  }
  return 1.0 - front * beta_cf(1.0 - x, q, p) / q;
}

double beta_quantile(double u, double p, double q) {
  if (!(p > 0) || !(q > 0)) throw ValidationError("beta_quantile: p,q must be positive");
  if (!(u > 0.0 && u < 1.0)) throw ValidationError("beta_quantile: u must be in (0,1)");

  const double tol = 1e-10;
  double lo = 0.0, hi = 1.0;
  double x = p / (p + q);  // start at the mean
  const double lb = log_beta(p, q);
  for (int it = 0; it < 300; ++it) {
    double f = reg_inc_beta(x, p, q) - u;
    if (f > 0)
      hi = x;
    else
      lo = x;
    // Newton step with the beta density as derivative
    double logpdf = (p - 1.0) * std::log(x) + (q - 1.0) * std::log1p(-x) - lb;
    double step = f * std::exp(-logpdf);
    double xn = x - step;
    if (!(xn > lo && xn < hi)) {
      xn = 0.5 * (lo + hi);  // safeguard
      step = x - xn;
    }
    // solve past |f| <= tol until x itself stops moving, so flat CDF
    // stretches still return a machine-accurate abscissa; tolerances are
    // relative in x so quantiles near 0 keep full precision
    bool converged = std::fabs(f) <= tol && std::fabs(step) <= 4e-16 * x;
    x = xn;
    if (converged || (hi - lo) < 4e-16 * std::max(lo, 1e-300)) return x;
  }
  std::ostringstream msg;
  msg << "beta_quantile: no convergence for u=" << u << " p=" << p << " q=" << q;
  throw ValidationError(msg.str());
}

}  // namespace nonstat
