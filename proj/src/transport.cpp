#include "nonstat/transport.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>

#include "nonstat/beta.hpp"
#include "nonstat/errors.hpp"

namespace nonstat {

namespace {

double simpson(double a, double b, double fa, double fm, double fb) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double adaptive_step(const std::function<double(double)>& f, double a, double m, double b,
                     double fa, double fm, double fb, double whole, double tol, int depth) {
  double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  double flm = f(lm), frm = f(rm);
  double left = simpson(a, m, fa, flm, fm);
  double right = simpson(m, b, fm, frm, fb);
  double delta = left + right - whole;
  if (depth <= 0 || std::fabs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return adaptive_step(f, a, lm, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_step(f, m, rm, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

double surface_const(int d) {
  // 2 pi^{d/2} / Gamma(d/2)
  return 2.0 * std::pow(M_PI, 0.5 * d) / std::tgamma(0.5 * d);
}

}  // namespace

double adaptive_quad(const std::function<double(double)>& f, double a, double b, double rel_tol) {
  double m = 0.5 * (a + b);
  double fa = f(a), fm = f(m), fb = f(b);
  double whole = simpson(a, b, fa, fm, fb);
  double scale = std::max(std::fabs(whole), 1e-300);
  return adaptive_step(f, a, m, b, fa, fm, fb, whole, rel_tol * scale, 48);
}

double radial_mass(const SpectralDensity& C, int d) {
  const double surf = surface_const(d);
  if (C.kind == SpectralDensity::Kind::tabulated) {
    double rmax = C.table.x.back();
    auto f = [&](double r) { return std::pow(r, d - 1) * C(r); };
    return surf * adaptive_quad(f, 0.0, rmax, 1e-10);
  }
  // map [0,inf) to [0,1) with r = t/(1-t)
  auto f = [&](double t) {
    if (t >= 1.0) return 0.0;
    double r = t / (1.0 - t);
    double jac = 1.0 / ((1.0 - t) * (1.0 - t));
    return std::pow(r, d - 1) * C(r) * jac;
  };
  return surf * adaptive_quad(f, 0.0, 1.0 - 1e-12, 1e-10);
}

double matern_F(double r, double nu, double rho, int d) {
  if (!(nu > 1.0)) throw ValidationError("matern_F: requires nu > 1 (finite second moment)");
  if (r < 0) throw ValidationError("matern_F: radius must be >= 0");
  double a = 4.0 * nu / (rho * rho);
  double x = r * r / (a + r * r);
  return reg_inc_beta(x, 0.5 * d, nu);
}

double matern_Finv(double u, double nu, double rho, int d) {
  if (!(nu > 1.0)) throw ValidationError("matern_Finv: requires nu > 1 (finite second moment)");
  double a = 4.0 * nu / (rho * rho);
  double x = beta_quantile(u, 0.5 * d, nu);
  return std::sqrt(a * x / (1.0 - x));
}

IsotropicCDF isotropic_cdf(const SpectralDensity& C, int d) {
  IsotropicCDF out;
  out.dim = d;
  out.mass = radial_mass(C, d);
  if (!(out.mass > 0)) throw ValidationError("isotropic_cdf: density has zero mass");
  const double surf = surface_const(d);
  const double mass = out.mass;
  out.pdf = [C, d, surf, mass](double r) { return surf * std::pow(r, d - 1) * C(r) / mass; };

  if (C.kind == SpectralDensity::Kind::matern) {
    double nu = C.nu, rho = C.rho;
    if (!(nu > 1.0)) throw ValidationError("isotropic_cdf: Matern transport requires nu > 1");
    out.F = [nu, rho, d](double r) { return matern_F(r, nu, rho, d); };
    out.Finv = [nu, rho, d](double u) { return matern_Finv(u, nu, rho, d); };
    return out;
  }
  if (C.kind != SpectralDensity::Kind::tabulated)
    throw ValidationError("isotropic_cdf: constant densities have no normalizable radial CDF");

  // numeric CDF on a dense radius grid over the table support
  const double rmax = C.table.x.back();
  const int npts = 4001;
  rvec rs(npts), cdf(npts, 0.0);
  for (int i = 0; i < npts; ++i) rs[i] = rmax * i / (npts - 1.0);
  auto f = out.pdf;
  for (int i = 1; i < npts; ++i) {
    double a = rs[i - 1], b = rs[i], m = 0.5 * (a + b);
    cdf[i] = cdf[i - 1] + simpson(a, b, f(a), f(m), f(b));
  }
  double top = cdf.back();
  for (auto& v : cdf) v /= top;  // absorb quadrature drift
  auto spline = std::make_shared<MonotoneCubic>(MonotoneCubic::fit(rs, cdf));
  out.F = [spline](double r) {
    if (r <= 0) return 0.0;
    if (r >= spline->x.back()) return 1.0;
    return std::clamp(spline->eval(r), 0.0, 1.0);
  };
  out.Finv = [spline](double u) {
    if (!(u > 0.0 && u < 1.0)) throw ValidationError("Finv: u must be in (0,1)");
    double lo = 0.0, hi = spline->x.back();
    for (int it = 0; it < 200 && (hi - lo) > 1e-14 * spline->x.back(); ++it) {
      double mid = 0.5 * (lo + hi);
      (spline->eval(mid) < u ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  };
  return out;
}

namespace {

// Finv_target(F_base(r)). For Matern pairs both tails go through the
// complementary incomplete beta so the composition stays accurate when
// F(r) is close to 0 or 1.
std::function<double(double)> make_psi_prime(const SpectralDensity& C,
                                             const SpectralDensity& Ct, int d,
                                             const IsotropicCDF& Fb, const IsotropicCDF& Ft) {
  if (C.kind == SpectralDensity::Kind::matern && Ct.kind == SpectralDensity::Kind::matern) {
    double nu = C.nu, a = 4.0 * nu / (C.rho * C.rho);
    double nut = Ct.nu, at = 4.0 * nut / (Ct.rho * Ct.rho);
    double dd = 0.5 * d;
    return [=](double r) -> double {
      if (r <= 0.0) return 0.0;
      double x = r * r / (a + r * r);
      if (x <= 0.5) {
        double u = reg_inc_beta(x, dd, nu);
        if (u <= 0.0) return 0.0;
        double xt = beta_quantile(u, dd, nut);
        return std::sqrt(at * xt / (1.0 - xt));
      }
      double v = reg_inc_beta(1.0 - x, nu, dd);  // 1 - F(r)
      if (v <= 0.0) return std::numeric_limits<double>::infinity();
      double yt = beta_quantile(v, nut, dd);  // 1 - x_target
      return std::sqrt(at * (1.0 - yt) / yt);
    };
  }
  auto F = Fb.F;
  auto Finv = Ft.Finv;
  return [F, Finv](double r) -> double {
    if (r <= 0.0) return 0.0;
    double u = F(r);
    if (u <= 0.0) return 0.0;
    if (u >= 1.0) u = 1.0 - 1e-15;
    return Finv(u);
  };
}

}  // namespace

TransportSpec build_transport(const SpectralDensity& C, const SpectralDensity& C_target,
                              double t0, int d, double mass_rel_tol) {
  if (!(t0 > 0)) throw ValidationError("build_transport: t0 must be positive");
  TransportSpec tr;
  tr.dim = d;
  tr.t0 = t0;
  tr.base = C;
  tr.target = C_target;
  tr.F_base = isotropic_cdf(C, d);
  tr.F_target = isotropic_cdf(C_target, d);
  tr.base_mass = tr.F_base.mass;
  tr.target_mass = tr.F_target.mass;
  double rel = std::fabs(tr.base_mass - tr.target_mass) /
               std::max(std::fabs(tr.base_mass), std::fabs(tr.target_mass));
  if (rel > mass_rel_tol) {
    std::ostringstream msg;
    msg << "build_transport: total masses differ by " << rel * 100.0
        << "% (base=" << tr.base_mass << ", target=" << tr.target_mass
        << "); transported densities must share their integral";
    throw ValidationError(msg.str());
  }
  tr.psi_prime = make_psi_prime(C, C_target, d, tr.F_base, tr.F_target);
  auto psi = tr.psi_prime;
  tr.eta = radial_eta([psi, t0](double r) { return (psi(r) - r) / t0; });
  return tr;
}

CutLocusResult cut_locus_c0(const std::vector<rvec>& eta, const std::array<double, 4>& A,
                            const GridSpec& g, double tol_pd, double tol_asym) {
  const int d = g.d;
  const std::size_t sz = g.size();
  // V = A^T eta
  std::vector<rvec> V(d, rvec(sz, 0.0));
  for (std::size_t i = 0; i < sz; ++i)
    for (int p = 0; p < d; ++p) {
      double acc = 0;
      for (int a = 0; a < d; ++a) acc += A[a * 2 + p] * eta[a][i];
      V[p][i] = acc;
    }
  // DV[p][b] = dV_p / dk_b by finite differences
  std::vector<rvec> DV(d * d);
  for (int p = 0; p < d; ++p)
    for (int b = 0; b < d; ++b) DV[p * d + b] = lattice_derivative_signed(g, V[p], b);
  double max_dv = 0;
  for (const auto& t : DV)
    for (double v : t) {
      if (!std::isfinite(v)) throw ValidationError("cut_locus_c0: non-finite finite differences");
      max_dv = std::max(max_dv, std::fabs(v));
    }
  if (tol_asym < 0) {
    double normA = 0;
    for (double v : A) normA = std::max(normA, std::fabs(v));
    tol_asym = 1e-6 * std::max(normA, 1.0) * std::max(max_dv, 1.0);
  }

  auto min_eig_at = [&](std::size_t i, double c, int sign) -> double {
    if (d == 1) return 1.0 + sign * c * DV[0][i];
    double j00 = 1.0 + sign * c * DV[0][i];
    double j01 = sign * c * DV[1][i];
    double j10 = sign * c * DV[2][i];
    double j11 = 1.0 + sign * c * DV[3][i];
    double s01 = 0.5 * (j01 + j10);
    double tr = 0.5 * (j00 + j11);
    double disc = std::sqrt(0.25 * (j00 - j11) * (j00 - j11) + s01 * s01);
    return tr - disc;
  };
  auto asym_at = [&](std::size_t i, double c) -> double {
    if (d == 1) return 0.0;
    return std::fabs(0.5 * c * (DV[1][i] - DV[2][i]));
  };
  auto ok = [&](double c) {
    for (std::size_t i = 0; i < sz; ++i) {
      if (asym_at(i, c) > tol_asym) return false;
      if (min_eig_at(i, c, +1) <= tol_pd) return false;
      if (min_eig_at(i, c, -1) <= tol_pd) return false;
    }
    return true;
  };

  CutLocusResult res;
  double hi = 1.0;
  int doublings = 0;
  while (ok(hi)) {
    hi *= 2.0;
    if (++doublings > 120) {
      res.unbounded = true;
      res.c0 = std::numeric_limits<double>::infinity();
      return res;
    }
  }
  // refine beyond the reported 1e-3 so independently scaled runs agree there
  double lo = 0.0;
  while ((hi - lo) > 1e-4 * hi) {
    double mid = 0.5 * (lo + hi);
    (ok(mid) ? lo : hi) = mid;
  }
  res.c0 = lo;
  res.unbounded = false;
  res.min_eig_profile.resize(sz);
  for (std::size_t i = 0; i < sz; ++i)
    res.min_eig_profile[i] = std::min(min_eig_at(i, lo, +1), min_eig_at(i, lo, -1));
  return res;
}

GeodesicTable geodesic_density(const TransportSpec& tr, double t, const rvec& radii) {
  if (!(t >= 0.0 && t <= tr.t0)) throw ValidationError("geodesic_density: t must lie in [0, t0]");
  const int d = tr.dim;
  GeodesicTable out;
  out.s.resize(radii.size());
  out.density.resize(radii.size());
  auto eta_r = [&](double r) { return r == 0.0 ? 0.0 : (tr.psi_prime(r) - r) / tr.t0; };
  double prev_s = -1.0;
  for (std::size_t i = 0; i < radii.size(); ++i) {
    double r = radii[i];
    if (r < 0) throw ValidationError("geodesic_density: radii must be >= 0");
    double s = r + t * eta_r(r);
    if (s <= prev_s)
      throw ValidationError(
          "geodesic_density: r + t*eta(r) is not increasing at the requested t "
          "(map non-injective, beyond the cut locus)");
    prev_s = s;
    double sprime;
    if (r == 0.0) {
      // eta'(0) from a small one-sided difference of eta(r)/r
      double h = radii.size() > 1 && radii[1] > 0 ? 1e-3 * radii[1] : 1e-6;
      sprime = 1.0 + t * eta_r(h) / h;
    } else {
      // s' = 1 + t (psi'' - 1)/t0 with psi'' = f_base(r) / f_target(psi'(r))
      double fb = tr.F_base.pdf(r);
      double ft = tr.F_target.pdf(tr.psi_prime(r));
      if (!(ft > 0.0)) throw ValidationError("geodesic_density: target density vanishes");
      sprime = 1.0 + t * (fb / ft - 1.0) / tr.t0;
    }
    if (!(sprime > 0.0)) throw ValidationError("geodesic_density: non-injective map at requested t");
    if (r == 0.0) {
      out.s[i] = 0.0;
      out.density[i] = tr.base(0.0) / std::pow(sprime, d);
    } else {
      out.s[i] = s;
      out.density[i] = tr.base(r) * std::pow(r / s, d - 1) / sprime;
    }
  }
  return out;
}

}  // namespace nonstat
