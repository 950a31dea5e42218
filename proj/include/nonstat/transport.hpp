#ifndef NONSTAT_TRANSPORT_HPP
#define NONSTAT_TRANSPORT_HPP

#include <array>
#include <functional>
#include <limits>

#include "nonstat/grid.hpp"
#include "nonstat/spectral.hpp"

namespace nonstat {

// Adaptive Simpson quadrature to a relative tolerance.
double adaptive_quad(const std::function<double(double)>& f, double a, double b,
                     double rel_tol = 1e-10);

// Total mass of the isotropic density over R^d: surf(d) * int r^{d-1} C(r) dr.
// Tabulated densities are integrated over their table range.
double radial_mass(const SpectralDensity& C, int d);

// Radial CDF of the normalized measure C(|k|) dk, with its inverse and pdf.
// Normalization always uses the numerically computed total mass so that F is
// a true CDF regardless of the nominal variance parameter.
struct IsotropicCDF {
  int dim = 1;
  double mass = 0;
  std::function<double(double)> F;     // radius -> [0,1]
  std::function<double(double)> Finv;  // (0,1) -> radius
  std::function<double(double)> pdf;   // radial density of |K|
};

IsotropicCDF isotropic_cdf(const SpectralDensity& C, int d);

// Closed forms for the Matern family (valid for nu > 1, finite second moment):
//   F(r)     = I_{r^2/(4nu/rho^2 + r^2)}(d/2, nu)
//   Finv(u)  = sqrt(4nu/rho^2) (1/Q_u(d/2,nu) - 1)^{-1/2}
double matern_F(double r, double nu, double rho, int d);
double matern_Finv(double u, double nu, double rho, int d);

// eta_k = (1/t0) (Finv_target(F_base(|k|)) k/|k| - k), eta_0 = 0.
struct TransportSpec {
  int dim = 1;
  double t0 = 0;
  SpectralDensity base, target;
  IsotropicCDF F_base, F_target;
  double base_mass = 0, target_mass = 0;
  std::function<double(double)> psi_prime;  // Finv_target o F_base
  EtaField eta;
};

TransportSpec build_transport(const SpectralDensity& C, const SpectralDensity& C_target,
                              double t0, int d, double mass_rel_tol = 0.01);

// Symmetric two-sided cut locus: the largest c such that, at every lattice
// point, the finite-difference Jacobians of k +- c A^T eta_k have positive
// definite symmetric part (min eigenvalue > tol_pd) and antisymmetric part
// below tol_asym. Returns +infinity when no c violates (eta == 0).
struct CutLocusResult {
  double c0 = std::numeric_limits<double>::infinity();
  bool unbounded = false;
  rvec min_eig_profile;  // per lattice point, at the returned c0 (empty if unbounded)
};

CutLocusResult cut_locus_c0(const std::vector<rvec>& eta, const std::array<double, 4>& A,
                            const GridSpec& g, double tol_pd = 1e-9, double tol_asym = -1.0);

// Density of the pushforward (k + t eta_k) # C along the geodesic, tabulated
// at the images s(r) of the requested radii. Requires 0 <= t <= t0 and
// injectivity of r + t eta(r) on the radius grid.
struct GeodesicTable {
  rvec s;        // image radii
  rvec density;  // C^{(t)}(s)
};

GeodesicTable geodesic_density(const TransportSpec& tr, double t, const rvec& radii);

}  // namespace nonstat

#endif
