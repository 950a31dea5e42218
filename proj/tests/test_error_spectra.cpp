#include "doctest.h"

#include <cmath>

#include "nonstat/error_spectra.hpp"
#include "nonstat/simulate.hpp"
#include "nonstat/transport.hpp"

using namespace nonstat;

namespace {

PhaseModel section33_model(int n, double t0 = 1.5) {
  GridSpec g = make_grid(1, 10.0, n);
  SpectralDensity C = matern(2.0, 0.05, 1.0, 1);
  SpectralDensity Ct = matern(2.1, 0.05, 1.0, 1);
  TransportSpec tr = build_transport(C, Ct, t0, 1);
  SpectralDensity prior = matern(5.0, 1.5, 225.0 / std::pow(2.0 * M_PI, 4), 1);
  return build_phase_model(g, C, tr.eta, {SpectralMultiplier::Kind::gradient}, prior,
                           zero_density(), MarginalOption::option1);
}

}  // namespace

TEST_CASE("matched CXX collapses the variance to 2 (2pi)^{-d/2} A") {
  for (int d : {1, 2}) {
    GridSpec g = make_grid(d, d == 1 ? 10.0 : 2.0 * M_PI, d == 1 ? 128 : 16);
    SpectralDensity C = matern(2.0, d == 1 ? 0.5 : 0.6, 1.0, d);
    EtaField eta = radial_eta([](double r) { return 0.25 * r; });
    PhaseModel m = build_phase_model(g, C, eta, {SpectralMultiplier::Kind::gradient},
                                     matern(3.0, 1.0, 0.05, d), constant_density(0.02),
                                     MarginalOption::option1);
    EstimatorKernel ker = build_kernel(m, nyquist_mask(g, 0.1));
    rvec cv = var_spectrum(ker, CXXOption::matched);
    rvec cv_direct = var_spectrum_direct(ker, CXXOption::matched);
    const double tp = g.two_pi_half_d();
    for (std::size_t l = 0; l < g.size(); ++l) {
      if (!ker.validA[l]) continue;
      double expected = 2.0 * ker.A[l] / tp;
      CHECK(cv[l] == doctest::Approx(expected).epsilon(1e-10));
      CHECK(cv_direct[l] == doctest::Approx(expected).epsilon(1e-10));
      CHECK(cv[l] > 0.0);
    }
  }
}

TEST_CASE("variance: fast and direct paths agree for unmatched CXX") {
  GridSpec g = make_grid(1, 10.0, 64);
  SpectralDensity C = matern(2.0, 0.5, 1.0, 1);
  EtaField eta = radial_eta([](double r) { return 0.3 * r + 0.01 * r * r; });
  PhaseModel m = build_phase_model(g, C, eta, {SpectralMultiplier::Kind::gradient},
                                   matern(3.0, 1.0, 0.05, 1), constant_density(0.05),
                                   MarginalOption::option2);
  EstimatorKernel ker = build_kernel(m, nyquist_mask(g, 0.0));
  for (CXXOption opt : {CXXOption::option1, CXXOption::option2}) {
    rvec fast = var_spectrum(ker, opt);
    rvec direct = var_spectrum_direct(ker, opt);
    for (std::size_t l = 0; l < g.size(); ++l) {
      if (!ker.validA[l]) continue;
      CHECK(fast[l] == doctest::Approx(direct[l]).epsilon(1e-8));
    }
  }
}

TEST_CASE("variance never decreases when observational noise inflates") {
  GridSpec g = make_grid(1, 10.0, 64);
  SpectralDensity C = matern(2.0, 0.5, 1.0, 1);
  EtaField eta = radial_eta([](double r) { return 0.3 * r; });
  SpectralDensity prior = matern(3.0, 1.0, 0.05, 1);
  PhaseModel lo = build_phase_model(g, C, eta, {SpectralMultiplier::Kind::gradient}, prior,
                                    constant_density(0.01), MarginalOption::option1);
  PhaseModel hi = build_phase_model(g, C, eta, {SpectralMultiplier::Kind::gradient}, prior,
                                    constant_density(0.05), MarginalOption::option1);
  EstimatorKernel klo = build_kernel(lo, nyquist_mask(g, 0.0));
  EstimatorKernel khi = build_kernel(hi, nyquist_mask(g, 0.0));
  rvec vlo = var_spectrum(klo, CXXOption::matched);
  rvec vhi = var_spectrum(khi, CXXOption::matched);
  for (std::size_t l = 0; l < g.size(); ++l) {
    if (!klo.validA[l] || !khi.validA[l]) continue;
    CHECK(vhi[l] >= vlo[l] * (1.0 - 1e-12));
  }
}

TEST_CASE("Monte Carlo variance oracle at phi = 0") {
  PhaseModel m = section33_model(256);
  const GridSpec& g = m.grid;
  EstimatorKernel ker = build_kernel(m, nyquist_mask(g, 0.10));
  rvec cv = var_spectrum(ker, CXXOption::matched);

  const int M = 400;
  rvec second(g.size(), 0.0);
  for (int r = 0; r < M; ++r) {
    GaussianRng rng(substream_seed(1234, r));
    Field z = gaussian_field(m.C, g, rng);
    Field ph = estimate_fast(z, ker);
    for (std::size_t l = 0; l < g.size(); ++l) second[l] += std::norm(ph.v[l]) / M;
  }
  const int B = 8;
  int bands = 0;
  for (int j0 = 1; j0 + B <= g.n / 4; j0 += B) {
    double emp = 0, mod = 0;
    for (int j = j0; j < j0 + B; ++j) {
      emp += second[j] * g.dk_d();
      mod += cv[j];
    }
    CHECK(emp / mod == doctest::Approx(1.0).epsilon(0.15));
    ++bands;
  }
  CHECK(bands >= 7);
}

TEST_CASE("bias map: zero theta, quadratic scaling, and the four-term oracle") {
  GridSpec g = make_grid(1, 10.0, 64);
  SpectralDensity C = matern(2.0, 0.5, 1.0, 1);
  EtaField eta = radial_eta([](double r) { return 0.3 * r + 0.02 * r * r; });
  PhaseModel m = build_phase_model(g, C, eta, {SpectralMultiplier::Kind::gradient},
                                   matern(3.0, 1.0, 0.05, 1), zero_density(),
                                   MarginalOption::option1);
  EstimatorKernel ker = build_kernel(m, nyquist_mask(g, 0.0));
  const std::size_t sz = g.size();

  std::vector<cvec> theta0(1, cvec(sz, cplx(0, 0)));
  cvec none = bias_map(ker, theta0);
  for (const auto& v : none) CHECK(std::abs(v) == 0.0);

  GaussianRng rng(2024);
  Field phi = simulate_phi(m.prior, g, rng);
  auto theta = theta_from_phi(phi, m.xi);
  std::vector<cvec> tk(1);
  tk[0] = fft(theta[0]).v;

  cvec b1 = bias_map(ker, tk);
  std::vector<cvec> tk2(1, tk[0]);
  for (auto& v : tk2[0]) v *= 2.0;
  cvec b2 = bias_map(ker, tk2);
  for (std::size_t l = 0; l < sz; ++l)
    CHECK(std::abs(b2[l] - 4.0 * b1[l]) < 1e-10 * (1.0 + 4.0 * std::abs(b1[l])));

  // independent from-scratch evaluation: the four-term second-order kernel
  //   X(k,l) = sum_w th_w th_{l-w} (C2_k + C2_{k+l} - C2_{k+l-w} - C2_{k+w}) dw/(2pi)^{d/2}
  // pushed through the generic weighting
  const double meas = g.dk_d() / g.two_pi_half_d();
  std::vector<cvec> Xtab(sz, cvec(sz, cplx(0, 0)));  // [l][k]
  const rvec& C2 = m.C2[0];
  for (std::size_t l = 0; l < sz; ++l)
    for (std::size_t k = 0; k < sz; ++k) {
      cplx acc(0, 0);
      std::size_t kl = g.add_wrap(k, l);
      for (std::size_t w = 0; w < sz; ++w) {
        std::size_t lw = g.add_wrap(l, g.conj_index(w));  // l - w
        std::size_t klw = g.add_wrap(kl, g.conj_index(w));
        std::size_t kw = g.add_wrap(k, w);
        acc += tk[0][w] * tk[0][lw] * (C2[k] + C2[kl] - C2[klw] - C2[kw]);
      }
      Xtab[l][k] = acc * meas;
    }
  cvec oracle = apply_weighting(ker, [&](std::size_t k, std::size_t l) { return Xtab[l][k]; });
  double err = 0, ref = 0;
  for (std::size_t l = 0; l < sz; ++l) {
    err += std::norm(b1[l] - oracle[l]);
    ref += std::norm(oracle[l]);
  }
  CHECK(std::sqrt(err / ref) < 1e-8);

  // table-backed path matches the on-the-fly path
  BiasWeightTable table = bias_weight_table(ker);
  cvec b1t = bias_map(ker, tk, table);
  for (std::size_t l = 0; l < sz; ++l)
    CHECK(std::abs(b1t[l] - b1[l]) < 1e-12 * (1.0 + std::abs(b1[l])));
}

TEST_CASE("bias spectrum: degenerate prior, positivity, exact quadratic scaling") {
  GridSpec g = make_grid(1, 10.0, 64);
  SpectralDensity C = matern(2.0, 0.5, 1.0, 1);
  EtaField eta = radial_eta([](double r) { return 0.3 * r; });

  PhaseModel none = build_phase_model(g, C, eta, {SpectralMultiplier::Kind::gradient},
                                      zero_density(), constant_density(0.01),
                                      MarginalOption::option1);
  EstimatorKernel kn = build_kernel(none, nyquist_mask(g, 0.0));
  rvec zero = bias_spectrum_exact(kn);
  for (double v : zero) CHECK(v == 0.0);

  PhaseModel m = build_phase_model(g, C, eta, {SpectralMultiplier::Kind::gradient},
                                   matern(3.0, 1.0, 0.05, 1), zero_density(),
                                   MarginalOption::option1);
  EstimatorKernel ker = build_kernel(m, nyquist_mask(g, 0.0));
  rvec cb = bias_spectrum_exact(ker);
  double mx = 0;
  for (std::size_t l = 0; l < g.size(); ++l) {
    if (!ker.validA[l]) continue;
    mx = std::max(mx, cb[l]);
    CHECK(cb[l] >= -1e-10 * (1.0 + mx));
  }
  CHECK(mx > 0.0);

  // scaling the theta cross-spectrum by s scales the bias spectrum by s^2
  PhaseModel ms = build_phase_model(g, C, eta, {SpectralMultiplier::Kind::gradient},
                                    matern(3.0, 1.0, 0.05 * 3.0, 1), zero_density(),
                                    MarginalOption::option1);
  EstimatorKernel ks = build_kernel(ms, nyquist_mask(g, 0.0));
  rvec cbs = bias_spectrum_exact(ks);
  for (std::size_t l = 0; l < g.size(); ++l) {
    if (!ker.validA[l]) continue;
    CHECK(cbs[l] == doctest::Approx(9.0 * cb[l]).epsilon(1e-10));
  }
}

TEST_CASE("bias spectrum against the Monte Carlo bias-map oracle") {
  PhaseModel m = section33_model(128);
  const GridSpec& g = m.grid;
  EstimatorKernel ker = build_kernel(m, nyquist_mask(g, 0.10));
  rvec cb = bias_spectrum_exact(ker);
  BiasWeightTable table = bias_weight_table(ker);

  const int M = 400;
  rvec second(g.size(), 0.0);
  for (int r = 0; r < M; ++r) {
    GaussianRng rng(substream_seed(777, r));
    Field phi = simulate_phi(m.prior, g, rng);
    auto theta = theta_from_phi(phi, m.xi);
    std::vector<cvec> tk(1, fft(theta[0]).v);
    cvec bm = bias_map(ker, tk, table);
    for (std::size_t l = 0; l < g.size(); ++l) second[l] += std::norm(bm[l]) / M;
  }
  const int B = 8;
  int bands = 0;
  for (int j0 = 1; j0 + B <= g.n / 4; j0 += B) {
    double emp = 0, mod = 0;
    for (int j = j0; j < j0 + B; ++j) {
      emp += second[j] * g.dk_d();
      mod += cb[j];
    }
    CHECK(emp / mod == doctest::Approx(1.0).epsilon(0.15));
    ++bands;
  }
  CHECK(bands >= 3);
}

TEST_CASE("fast bias tracks the exact bias at low wavenumbers") {
  // The Taylor surrogate is a physical-scale approximation: it holds where
  // the prior carries power (|l| <~ 10 here, the lowest quarter of the n=128
  // reference grid). Beyond that the exact bias has decayed by many orders
  // of magnitude and no second-order expansion tracks it.
  PhaseModel m = section33_model(512);
  EstimatorKernel ker = build_kernel(m, nyquist_mask(m.grid, 0.10));
  rvec exact = bias_spectrum_exact(ker);
  rvec fast = bias_spectrum_fast(ker);
  for (int j = 1; j <= 16; ++j) {
    CHECK(fast[j] / exact[j] == doctest::Approx(1.0).epsilon(0.10));
  }
  // degenerate prior gives zero
  PhaseModel none = build_phase_model(m.grid, m.C, m.eta, m.xi, zero_density(), zero_density(),
                                      MarginalOption::option1);
  EstimatorKernel kn = build_kernel(none, nyquist_mask(m.grid, 0.0));
  rvec zf = bias_spectrum_fast(kn);
  for (double v : zf) CHECK(v == 0.0);
}

TEST_CASE("error spectra bundle: signs, provenance hash") {
  PhaseModel m = section33_model(128);
  EstimatorKernel ker = build_kernel(m, nyquist_mask(m.grid, 0.10));
  ErrorSpectra es = make_error_spectra(ker, CXXOption::matched);
  CHECK(es.bias_is_fast);
  CHECK(es.grid == m.grid);
  for (std::size_t l = 0; l < m.grid.size(); ++l) {
    if (!ker.validA[l]) continue;
    CHECK(es.Cvar[l] > 0.0);
    CHECK(es.Cbias[l] >= 0.0);
  }
  ErrorSpectra ex = make_error_spectra(ker, CXXOption::matched, true);
  CHECK(!ex.bias_is_fast);
  CHECK(ex.model_hash == es.model_hash);

  PhaseModel m2 = section33_model(128, 1.5 / 7.0);
  EstimatorKernel ker2 = build_kernel(m2, nyquist_mask(m2.grid, 0.10));
  CHECK(kernel_model_hash(ker2) != es.model_hash);
}

TEST_CASE("d=2 bias: exact spectrum against the Monte Carlo bias-map oracle") {
  GridSpec g = make_grid(2, 2.0 * M_PI, 32);
  SpectralDensity C = matern(1.5, 0.5, 1.0, 2);
  SpectralDensity Ct = matern(1.7, 0.45, 1.0, 2);
  TransportSpec tr = build_transport(C, Ct, 1.5, 2, 0.02);
  PhaseModel m = build_phase_model(g, C, tr.eta, {SpectralMultiplier::Kind::rot_gradient},
                                   matern(5.0, 1.5, 0.05, 2), zero_density(),
                                   MarginalOption::option1);
  EstimatorKernel ker = build_kernel(m, nyquist_mask(g, 0.0));
  rvec cb = bias_spectrum_exact(ker);
  BiasWeightTable table = bias_weight_table(ker);
  const int M = 150;
  rvec second(g.size(), 0.0);
  for (int r = 0; r < M; ++r) {
    GaussianRng rng(substream_seed(888, r));
    Field phi = simulate_phi(m.prior, g, rng);
    auto theta = theta_from_phi(phi, m.xi);
    std::vector<cvec> tk = {fft(theta[0]).v, fft(theta[1]).v};
    cvec bm = bias_map(ker, tk, table);
    for (std::size_t l = 0; l < g.size(); ++l) second[l] += std::norm(bm[l]) / M;
  }
  // radial bands: E|bias map|^2 dk^2 = exact bias spectrum
  const double rmax = g.freq_norm(g.linear_index(g.n / 2, g.n / 2)) * (1 + 1e-12);
  const int nb = 8;
  for (int b = 0; b < nb; ++b) {
    double emp = 0, mod = 0;
    int cnt = 0;
    for (std::size_t i = 1; i < g.size(); ++i) {
      int bin = std::min(nb - 1, static_cast<int>(g.freq_norm(i) / (rmax / nb)));
      if (bin != b || !ker.validA[i]) continue;
      emp += second[i] * g.dk_d();
      mod += cb[i];
      ++cnt;
    }
    if (cnt < 16 || mod <= 0) continue;
    CHECK(emp / mod == doctest::Approx(1.0).epsilon(0.20));
  }
}

TEST_CASE("tilde bias spectrum is positive and uses the plus-sign kernel") {
  GridSpec g = make_grid(1, 2.0 * M_PI, 128);
  SpectralDensity C = matern(2.0, 0.1, 1.0, 1);
  PhaseModel m = build_phase_model(g, C, linear_eta(), {SpectralMultiplier::Kind::ones},
                                   matern(3.0, 0.6, 0.001, 1), zero_density(),
                                   MarginalOption::option1);
  EstimatorKernel kli = build_kernel(m, nyquist_mask(g, 0.0), Variant::local_invariant);
  EstimatorKernel kt = build_kernel(m, nyquist_mask(g, 0.0), Variant::tilde);
  rvec bli = bias_spectrum_exact(kli);
  rvec bt = bias_spectrum_exact(kt);
  // the non locally invariant estimate carries a larger second-order bias;
  // the orders-of-magnitude separation of the paper presets is asserted in
  // the fig1 experiment and the acceptance suite
  int low = 12;
  for (int j = 1; j <= low; ++j) {
    CHECK(bt[j] > 0.0);
    CHECK(bt[j] > 2.0 * bli[j]);
  }
}
