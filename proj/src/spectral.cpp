#include "nonstat/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "nonstat/errors.hpp"

namespace nonstat {

MonotoneCubic MonotoneCubic::fit(rvec xs, rvec ys) {
  if (xs.size() != ys.size() || xs.size() < 2)
    throw ValidationError("MonotoneCubic: need matching tables with >= 2 points");
  for (std::size_t i = 1; i < xs.size(); ++i)
    if (!(xs[i] > xs[i - 1])) throw ValidationError("MonotoneCubic: abscissae must increase");
  const std::size_t n = xs.size();
  rvec h(n - 1), delta(n - 1), m(n);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    h[i] = xs[i + 1] - xs[i];
    delta[i] = (ys[i + 1] - ys[i]) / h[i];
  }
  m[0] = delta[0];
  m[n - 1] = delta[n - 2];
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (delta[i - 1] * delta[i] <= 0.0) {
      m[i] = 0.0;
    } else {
      // weighted harmonic mean keeps the interpolant free of overshoot
      double w1 = 2.0 * h[i] + h[i - 1];
      double w2 = h[i] + 2.0 * h[i - 1];
      m[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
    }
  }
  // clamp endpoint slopes (Fritsch-Carlson condition)
  if (delta[0] == 0.0)
    m[0] = 0.0;
  else if (m[0] * delta[0] < 0.0)
    m[0] = 0.0;
  else if (std::fabs(m[0]) > 3.0 * std::fabs(delta[0]))
    m[0] = 3.0 * delta[0];
  if (delta[n - 2] == 0.0)
    m[n - 1] = 0.0;
  else if (m[n - 1] * delta[n - 2] < 0.0)
    m[n - 1] = 0.0;
  else if (std::fabs(m[n - 1]) > 3.0 * std::fabs(delta[n - 2]))
    m[n - 1] = 3.0 * delta[n - 2];

  MonotoneCubic out;
  out.x = std::move(xs);
  out.y = std::move(ys);
  out.slope = std::move(m);
  return out;
}

double MonotoneCubic::eval(double t) const {
  if (t <= x.front()) return y.front();
  if (t >= x.back()) return y.back();
  auto it = std::upper_bound(x.begin(), x.end(), t);
  std::size_t i = static_cast<std::size_t>(it - x.begin()) - 1;
  double h = x[i + 1] - x[i];
  double s = (t - x[i]) / h;
  double h00 = (1 + 2 * s) * (1 - s) * (1 - s);
  double h10 = s * (1 - s) * (1 - s);
  double h01 = s * s * (3 - 2 * s);
  double h11 = s * s * (s - 1);
  return h00 * y[i] + h10 * h * slope[i] + h01 * y[i + 1] + h11 * h * slope[i + 1];
}

double SpectralDensity::operator()(double knorm) const {
  switch (kind) {
    case Kind::matern:
      return amp * std::pow(a + knorm * knorm, -nu - 0.5 * dim);
    case Kind::constant:
      return value;
    case Kind::tabulated: {
      double v = table.eval(std::fabs(knorm));
      return v > 0.0 ? v : 0.0;
    }
  }
  return 0.0;
}

SpectralDensity matern(double nu, double rho, double sigma2, int d) {
  if (!(nu > 0) || !(rho > 0) || !(sigma2 > 0))
    throw ValidationError("matern: nu, rho, sigma2 must be positive");
  SpectralDensity s;
  s.kind = SpectralDensity::Kind::matern;
  s.nu = nu;
  s.rho = rho;
  s.sigma2 = sigma2;
  s.dim = d;
  s.a = 4.0 * nu / (rho * rho);
  s.amp = sigma2 * std::pow(2.0, d) * std::pow(M_PI, 0.5 * d) *
          std::exp(std::lgamma(nu + 0.5 * d) - std::lgamma(nu)) * std::pow(s.a, nu);
  return s;
}

SpectralDensity constant_density(double value) {
  if (value < 0) throw ValidationError("constant_density: value must be >= 0");
  SpectralDensity s;
  s.kind = SpectralDensity::Kind::constant;
  s.value = value;
  return s;
}

SpectralDensity zero_density() { return constant_density(0.0); }

SpectralDensity tabulated_density(rvec r, rvec val) {
  for (double v : val)
    if (v < 0) throw ValidationError("tabulated_density: values must be >= 0");
  SpectralDensity s;
  s.kind = SpectralDensity::Kind::tabulated;
  s.table = MonotoneCubic::fit(std::move(r), std::move(val));
  return s;
}

cplx SpectralMultiplier::eval(int j, const std::array<double, 2>& k) const {
  switch (kind) {
    case Kind::gradient:
      return cplx(0.0, k[j]);
    case Kind::ones:
      return cplx(1.0, 0.0);
    case Kind::rot_gradient:
      return j == 0 ? cplx(0.0, k[1]) : cplx(0.0, -k[0]);
  }
  return cplx(0.0, 0.0);
}

std::array<double, 2> EtaField::eval(const std::array<double, 2>& k) const {
  switch (kind) {
    case Kind::zero:
      return {0.0, 0.0};
    case Kind::linear:
      return k;
    case Kind::radial: {
      double r = std::sqrt(k[0] * k[0] + k[1] * k[1]);
      if (r == 0.0) return {0.0, 0.0};
      double e = radial(r) / r;
      return {e * k[0], e * k[1]};
    }
  }
  return {0.0, 0.0};
}

EtaField zero_eta() { return EtaField{EtaField::Kind::zero, nullptr}; }
EtaField linear_eta() { return EtaField{EtaField::Kind::linear, nullptr}; }

EtaField radial_eta(std::function<double(double)> fn) {
  return EtaField{EtaField::Kind::radial, std::move(fn)};
}

EtaField tabulated_eta(rvec r, rvec val) {
  auto spline = std::make_shared<MonotoneCubic>(MonotoneCubic::fit(std::move(r), std::move(val)));
  return radial_eta([spline](double rr) { return spline->eval(rr); });
}

rvec lattice_eval(const SpectralDensity& s, const GridSpec& g) {
  rvec out(g.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = s(g.freq_norm(i));
  return out;
}

cvec lattice_multiplier(const GridSpec& g, const SpectralMultiplier& xi, int j) {
  cvec out(g.size());
  const bool freq_dependent = xi.kind != SpectralMultiplier::Kind::ones;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (freq_dependent) {
      auto ji = g.axis_index(i);
      if (ji[0] == g.n / 2 || (g.d == 2 && ji[1] == g.n / 2)) {
        out[i] = cplx(0, 0);
        continue;
      }
    }
    out[i] = xi.eval(j, g.freq(i));
  }
  return out;
}

void derive_expansion(const GridSpec& g, const rvec& Ck, const std::vector<rvec>& eta,
                      rvec& C0, std::vector<cvec>& C1, std::vector<rvec>& C2) {
  const std::size_t m = g.size();
  const int d = g.d;
  const double tp = g.two_pi_half_d();
  C0.assign(m, 0.0);
  C1.assign(d, cvec(m, cplx(0, 0)));
  C2.assign(d * d, rvec(m, 0.0));
  for (std::size_t i = 0; i < m; ++i) {
    C0[i] = Ck[i] / tp;
    for (int p = 0; p < d; ++p) {
      C1[p][i] = cplx(0.0, eta[p][i] * Ck[i] / tp);
      for (int q = 0; q < d; ++q)
        C2[p * d + q][i] = -eta[p][i] * eta[q][i] * Ck[i] / (2.0 * tp);
    }
  }
}

rvec marginal_spectrum(const PhaseModel& m, MarginalOption opt, std::size_t cost_cap) {
  const GridSpec& g = m.grid;
  const std::size_t sz = g.size();
  rvec out(sz);
  if (opt == MarginalOption::option1) {
    for (std::size_t i = 0; i < sz; ++i) out[i] = m.Ck[i] + m.Cnn[i];
    return out;
  }
  if (sz > cost_cap)
    throw CostCapError("marginal_spectrum option2: lattice of " + std::to_string(sz) +
                       " points exceeds the cost cap of " + std::to_string(cost_cap) +
                       " (exact computation is O(n^{2d}))");
  const int d = g.d;
  // pixel-domain covariance of theta from the cross-spectra
  std::vector<rvec> cov(d * d);
  for (int p = 0; p < d; ++p)
    for (int q = 0; q < d; ++q) {
      Field f = make_field(g, Domain::fourier);
      f.v = m.Ctt[p * d + q];
      Field pf = ifft(f);
      cov[p * d + q].resize(sz);
      for (std::size_t i = 0; i < sz; ++i)
        cov[p * d + q][i] = pf.v[i].real() / g.two_pi_half_d();
    }

  const double measure = g.dk_d() / std::pow(2.0 * M_PI, d);
  Field czm_pix = make_field(g, Domain::pixel);
  for (std::size_t ir = 0; ir < sz; ++ir) {
    // Sigma(r) = 2 (cov(0) - cov(r))
    double S[4] = {0, 0, 0, 0};
    for (int p = 0; p < d; ++p)
      for (int q = 0; q < d; ++q)
        S[p * d + q] = 2.0 * (cov[p * d + q][0] - cov[p * d + q][ir]);
    auto r = g.coord(ir);
    double acc = 0.0;
    for (std::size_t ik = 0; ik < sz; ++ik) {
      auto k = g.freq(ik);
      double quad = 0.0;
      for (int p = 0; p < d; ++p)
        for (int q = 0; q < d; ++q) quad += m.eta_raw[p][ik] * S[p * d + q] * m.eta_raw[q][ik];
      double damp = std::exp(-0.5 * quad);
      acc += std::cos(r[0] * k[0] + r[1] * k[1]) * damp * m.Ck[ik];
    }
    czm_pix.v[ir] = acc * measure;
  }
  Field czm_k = fft(czm_pix);
  for (std::size_t i = 0; i < sz; ++i) {
    double v = g.two_pi_half_d() * czm_k.v[i].real();
    out[i] = std::max(v, 0.0) + m.Cnn[i];
  }
  return out;
}

PhaseModel build_phase_model(const GridSpec& g, const SpectralDensity& C, const EtaField& eta,
                             const SpectralMultiplier& xi, const SpectralDensity& prior,
                             const SpectralDensity& noise, MarginalOption opt,
                             std::size_t option2_cap) {
  if (xi.kind == SpectralMultiplier::Kind::rot_gradient && g.d != 2)
    throw ValidationError("build_phase_model: rot_gradient multiplier requires d=2");
  PhaseModel m;
  m.grid = g;
  m.C = C;
  m.prior = prior;
  m.noise = noise;
  m.eta = eta;
  m.xi = xi;
  m.marginal = opt;

  const std::size_t sz = g.size();
  const int d = g.d;
  m.Ck = lattice_eval(C, g);
  m.Cphi = lattice_eval(prior, g);
  m.Cnn = lattice_eval(noise, g);

  m.eta_raw.assign(d, rvec(sz, 0.0));
  m.eta_kernel.assign(d, rvec(sz, 0.0));
  for (std::size_t i = 0; i < sz; ++i) {
    auto e = eta.eval(g.freq(i));
    for (int p = 0; p < d; ++p) m.eta_raw[p][i] = e[p];
  }
  // exact odd projection: zeroes each component along its Nyquist row/column
  // so the derived Fourier arrays carry exact discrete Hermitian symmetry
  for (std::size_t i = 0; i < sz; ++i) {
    std::size_t c = g.conj_index(i);
    for (int p = 0; p < d; ++p)
      m.eta_kernel[p][i] = 0.5 * (m.eta_raw[p][i] - m.eta_raw[p][c]);
  }

  derive_expansion(g, m.Ck, m.eta_kernel, m.C0, m.C1, m.C2);

  m.xi_k.resize(d);
  for (int p = 0; p < d; ++p) m.xi_k[p] = lattice_multiplier(g, xi, p);
  m.Ctt.assign(d * d, cvec(sz, cplx(0, 0)));
  for (std::size_t i = 0; i < sz; ++i)
    for (int p = 0; p < d; ++p)
      for (int q = 0; q < d; ++q)
        m.Ctt[p * d + q][i] = m.xi_k[p][i] * std::conj(m.xi_k[q][i]) * m.Cphi[i];

  m.Cobs = marginal_spectrum(m, opt, option2_cap);
  return m;
}

PhaseModel preset_lensing(const GridSpec& g, const SpectralDensity& Ctt) {
  if (g.d != 2) throw ValidationError("preset_lensing: requires d=2");
  SpectralMultiplier grad{SpectralMultiplier::Kind::gradient};
  return build_phase_model(g, Ctt, linear_eta(), grad, zero_density(), zero_density(),
                           MarginalOption::option1);
}

}  // namespace nonstat
