#ifndef NONSTAT_BETA_HPP
#define NONSTAT_BETA_HPP

namespace nonstat {

// Regularized incomplete beta function I_x(p,q), x in [0,1], p,q > 0.
// Continued-fraction evaluation with a symmetry switch at x = p/(p+q);
// absolute error <= 1e-12.
double reg_inc_beta(double x, double p, double q);

// Inverse of I_x(p,q) in x for u in (0,1): Newton iteration with a
// bisection safeguard, solved to |I_x - u| <= 1e-10.
double beta_quantile(double u, double p, double q);

// log Beta(p,q)
double log_beta(double p, double q);

}  // namespace nonstat

#endif
