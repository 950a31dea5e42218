#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <functional>

#include "nonstat/beta.hpp"
#include "nonstat/errors.hpp"
#include "nonstat/spectral.hpp"
#include "nonstat/transport.hpp"

using namespace nonstat;

namespace {

double simpson_integral(const std::function<double(double)>& f, double a, double b, int n) {
  double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}

}  // namespace

TEST_CASE("matern radial CDF axioms and the half-argument anchor") {
  double nu = 2.0, rho = 0.05;
  CHECK(matern_F(0.0, nu, rho, 1) == doctest::Approx(0.0));
  double prev = 0.0;
  for (double r = 1.0; r < 2000.0; r *= 1.7) {
    double v = matern_F(r, nu, rho, 1);
    CHECK(v >= prev);
    prev = v;
  }
  CHECK(matern_F(2e5, nu, rho, 1) == doctest::Approx(1.0).epsilon(1e-6));

  // at r = sqrt(4 nu)/rho the beta argument is exactly 1/2
  double r_half = std::sqrt(4.0 * nu) / rho;
  CHECK(matern_F(r_half, nu, rho, 1) == doctest::Approx(reg_inc_beta(0.5, 0.5, 2.0)).epsilon(1e-12));
}

TEST_CASE("matern CDF against a quadrature oracle") {
  double nu = 2.0, rho = 0.05;
  SpectralDensity C = matern(nu, rho, 1.0, 1);
  double peak = std::sqrt(4.0 * nu) / rho;
  auto f = [&](double r) { return C(r); };
  double mass = simpson_integral(f, 0.0, 2000.0 * peak, 4000000);
  for (double r : {0.25 * peak, peak, 3.0 * peak}) {
    double want = simpson_integral(f, 0.0, r, 200000) / mass;
    CHECK(matern_F(r, nu, rho, 1) == doctest::Approx(want).epsilon(1e-6));
  }
  CHECK_THROWS_AS(matern_F(1.0, 0.9, rho, 1), ValidationError);
  CHECK_THROWS_AS(matern_Finv(0.5, 1.0, rho, 1), ValidationError);
}

TEST_CASE("identity transport round trips to 1e-8") {
  // raw pair, away from the saturated tail where u rounds against 1
  for (int d : {1, 2}) {
    double nu = 2.0, rho = 0.05;
    for (double r = 1e-3; r < 5e4; r *= 2.3) {
      double u = matern_F(r, nu, rho, d);
      if (u <= 0.0 || u >= 1.0 - 1e-6) continue;
      CHECK(matern_Finv(u, nu, rho, d) == doctest::Approx(r).epsilon(1e-8));
    }
    // the transport composition goes through the complementary tail and
    // stays accurate over the whole range
    SpectralDensity C = matern(nu, rho, 1.0, d);
    TransportSpec tr = build_transport(C, C, 1.0, d);
    for (double r = 1e-3; r < 5e4; r *= 2.3)
      CHECK(tr.psi_prime(r) == doctest::Approx(r).epsilon(1e-8));
  }
}

TEST_CASE("build_transport: identity gives zero eta, mass mismatch rejected") {
  SpectralDensity C = matern(2.0, 0.05, 1.0, 1);
  TransportSpec tr = build_transport(C, C, 1.5, 1);
  for (double r = 0.1; r < 1e4; r *= 3.0)
    CHECK(std::fabs(tr.eta.radial(r)) < 1e-7 * (1.0 + r));

  SpectralDensity other = matern(2.1, 0.05, 2.0, 1);  // double the mass
  CHECK_THROWS_AS(build_transport(C, other, 1.5, 1), ValidationError);
}

TEST_CASE("section-3.3 transport: monotone composition and tabulated oddness") {
  SpectralDensity C = matern(2.0, 0.05, 1.0, 1);
  SpectralDensity Ct = matern(2.1, 0.05, 1.0, 1);
  TransportSpec tr = build_transport(C, Ct, 1.5, 1);

  double prev = -1.0;
  for (double r = 0.0; r <= 4000.0; r += 4.0) {
    double v = tr.psi_prime(r);
    CHECK(v >= prev);  // composition of nondecreasing maps
    prev = v;
  }

  GridSpec g = make_grid(1, 10.0, 512);
  SpectralMultiplier xi{SpectralMultiplier::Kind::gradient};
  PhaseModel m = build_phase_model(g, C, tr.eta, xi, zero_density(), zero_density(),
                                   MarginalOption::option1);
  for (std::size_t i = 0; i < g.size(); ++i) {
    std::size_t c = g.conj_index(i);
    CHECK(m.eta_kernel[0][i] == -m.eta_kernel[0][c]);
    CHECK(std::isfinite(m.eta_raw[0][i]));
  }
  CHECK(m.eta_raw[0][0] == 0.0);
}

TEST_CASE("pushforward law: |K + t0 eta_K| follows the target CDF (KS test)") {
  SpectralDensity C = matern(2.0, 0.05, 1.0, 1);
  SpectralDensity Ct = matern(2.1, 0.05, 1.0, 1);
  double t0 = 1.5;
  TransportSpec tr = build_transport(C, Ct, t0, 1);

  const int N = 100000;
  std::vector<double> pushed(N);
  GaussianRng rng(123);
  for (int i = 0; i < N; ++i) {
    double u = rng.uniform();
    if (u >= 1.0) u = 1.0 - 1e-12;
    double r = matern_Finv(u, 2.0, 0.05, 1);  // sample |K| from the base law
    double eta = tr.eta.radial(r);
    pushed[i] = std::fabs(r + t0 * eta);
  }
  std::sort(pushed.begin(), pushed.end());
  double ks = 0.0;
  for (int i = 0; i < N; ++i) {
    double F = matern_F(pushed[i], 2.1, 0.05, 1);
    ks = std::max(ks, std::fabs(F - (i + 1.0) / N));
    ks = std::max(ks, std::fabs(F - static_cast<double>(i) / N));
  }
  CHECK(ks < 0.02);
}

TEST_CASE("geodesic density: endpoints and mass conservation") {
  SpectralDensity C = matern(2.0, 0.05, 1.0, 1);
  SpectralDensity Ct = matern(2.1, 0.05, 1.0, 1);
  double t0 = 1.5;
  TransportSpec tr = build_transport(C, Ct, t0, 1);

  rvec radii;
  for (int i = 0; i <= 6000; ++i) radii.push_back(i * 0.5);

  GeodesicTable tab0 = geodesic_density(tr, 0.0, radii);
  for (std::size_t i = 0; i < radii.size(); ++i) {
    CHECK(tab0.s[i] == doctest::Approx(radii[i]).epsilon(1e-12));
    CHECK(tab0.density[i] == doctest::Approx(C(radii[i])).epsilon(1e-9));
  }

  GeodesicTable tab1 = geodesic_density(tr, t0, radii);
  double sup = 0.0, ref = Ct(0.0);
  for (std::size_t i = 0; i < radii.size(); ++i)
    sup = std::max(sup, std::fabs(tab1.density[i] - Ct(tab1.s[i])));
  CHECK(sup < 0.01 * ref);

  // mass conserved along the path (d=1: 2 int density ds, trapezoid)
  auto table_mass = [&](const GeodesicTable& t) {
    double acc = 0.0;
    for (std::size_t i = 1; i < t.s.size(); ++i)
      acc += 0.5 * (t.density[i] + t.density[i - 1]) * (t.s[i] - t.s[i - 1]);
    return 2.0 * acc;
  };
  double base_mass = table_mass(tab0);
  for (double t : {0.25 * t0, 0.5 * t0, 0.75 * t0, t0}) {
    GeodesicTable tab = geodesic_density(tr, t, radii);
    CHECK(table_mass(tab) == doctest::Approx(base_mass).epsilon(0.005));
  }

  CHECK_THROWS_AS(geodesic_density(tr, -0.1, radii), ValidationError);
  CHECK_THROWS_AS(geodesic_density(tr, t0 * 1.5, radii), ValidationError);
}

TEST_CASE("numeric CDF path (tabulated density) matches the closed form") {
  SpectralDensity C = matern(2.0, 0.05, 1.0, 1);
  rvec r, v;
  for (int i = 0; i <= 20000; ++i) {
    r.push_back(i * 1.0);
    v.push_back(C(i * 1.0));
  }
  SpectralDensity Ctab = tabulated_density(r, v);
  IsotropicCDF cdf = isotropic_cdf(Ctab, 1);
  for (double rr : {30.0, 113.0, 400.0, 2000.0})
    CHECK(cdf.F(rr) == doctest::Approx(matern_F(rr, 2.0, 0.05, 1)).epsilon(2e-4));
  double u = 0.37;
  CHECK(cdf.Finv(u) == doctest::Approx(matern_Finv(u, 2.0, 0.05, 1)).epsilon(2e-4));
}

TEST_CASE("cut locus: unbounded for zero eta, exact scan oracle in d=1, scaling") {
  GridSpec g = make_grid(1, 10.0, 512);

  std::vector<rvec> eta0(1, rvec(g.size(), 0.0));
  CutLocusResult r0 = cut_locus_c0(eta0, {1.0, 0.0, 0.0, 1.0}, g);
  CHECK(r0.unbounded);

  SpectralDensity C = matern(2.0, 0.05, 1.0, 1);
  SpectralDensity Ct = matern(2.1, 0.05, 1.0, 1);
  TransportSpec tr = build_transport(C, Ct, 1.5, 1);
  SpectralMultiplier xi{SpectralMultiplier::Kind::gradient};
  PhaseModel m = build_phase_model(g, C, tr.eta, xi, zero_density(), zero_density(),
                                   MarginalOption::option1);

  CutLocusResult res = cut_locus_c0(m.eta_raw, {1.0, 0.0, 0.0, 1.0}, g, 1e-9);

  // direct scan oracle: in d=1 the condition is d/dk(k +- c eta_k) > 0,
  // so c0 = 1/max|eta'| with eta' by direct differencing over all k
  auto lat = [&](int s) { return ((s - g.n / 2) % g.n + g.n) % g.n; };
  double max_slope = 0.0;
  for (int s = 0; s + 1 < g.n; ++s) {
    double de = m.eta_raw[0][lat(s + 1)] - m.eta_raw[0][lat(s)];
    max_slope = std::max(max_slope, std::fabs(de) / g.dk);
  }
  double oracle = 1.0 / max_slope;
  CHECK(res.c0 == doctest::Approx(oracle).epsilon(5e-3));

  // scaling eta -> s eta scales c0 -> c0/s
  std::vector<rvec> eta3(1, rvec(g.size()));
  for (std::size_t i = 0; i < g.size(); ++i) eta3[0][i] = 3.0 * m.eta_raw[0][i];
  CutLocusResult res3 = cut_locus_c0(eta3, {1.0, 0.0, 0.0, 1.0}, g, 1e-9);
  CHECK(res3.c0 == doctest::Approx(res.c0 / 3.0).epsilon(3e-3));

  // two-sided: flipping the sign of eta must not change c0
  std::vector<rvec> etam(1, rvec(g.size()));
  for (std::size_t i = 0; i < g.size(); ++i) etam[0][i] = -m.eta_raw[0][i];
  CutLocusResult resm = cut_locus_c0(etam, {1.0, 0.0, 0.0, 1.0}, g, 1e-9);
  CHECK(resm.c0 == doctest::Approx(res.c0).epsilon(3e-3));
}

TEST_CASE("cut locus in d=2 for a radial transport eta") {
  GridSpec g = make_grid(2, 2.0 * M_PI, 32);
  SpectralDensity C = matern(1.5, 0.5, 1.0, 2);
  SpectralDensity Ct = matern(1.7, 0.45, 1.0, 2);
  TransportSpec tr = build_transport(C, Ct, 1.5, 2, 0.02);
  SpectralMultiplier xi{SpectralMultiplier::Kind::gradient};
  PhaseModel m = build_phase_model(g, C, tr.eta, xi, zero_density(), zero_density(),
                                   MarginalOption::option1);
  CutLocusResult res = cut_locus_c0(m.eta_raw, {1.0, 0.0, 0.0, 1.0}, g, 1e-9);
  CHECK(!res.unbounded);
  CHECK(res.c0 > 0.0);
  double mn = 1e300;
  for (double v : res.min_eig_profile) mn = std::min(mn, v);
  CHECK(mn > 0.0);
}
