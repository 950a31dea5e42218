#include "nonstat/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <thread>
#include <vector>

#include "nonstat/errors.hpp"

namespace nonstat {

namespace {

void run_chunked(std::size_t total, int workers, const std::function<void(std::size_t, std::size_t)>& body) {
  if (workers <= 1 || total < 2) {
    body(0, total);
    return;
  }
  std::size_t w = std::min<std::size_t>(workers, total);
  std::size_t chunk = (total + w - 1) / w;
  std::vector<std::thread> pool;
  for (std::size_t b = 0; b < total; b += chunk) {
    std::size_t e = std::min(total, b + chunk);
    pool.emplace_back([&body, b, e] { body(b, e); });
  }
  for (auto& t : pool) t.join();
}

Field synthesize_stationary(const rvec& spec_lattice, const Field& W) {
  const GridSpec& g = W.grid;
  Field f = make_field(g, Domain::fourier);
  const double d0 = g.delta0;
  for (std::size_t i = 0; i < f.v.size(); ++i)
    f.v[i] = std::sqrt(spec_lattice[i]) * W.v[i] * d0;
  Field z = ifft(f);
  for (auto& v : z.v) v = cplx(v.real(), 0.0);
  return z;
}

}  // namespace

Field gaussian_field_from_noise(const rvec& spec_lattice, const Field& W) {
  return synthesize_stationary(spec_lattice, W);
}

Field gaussian_field(const SpectralDensity& spec, const GridSpec& g, GaussianRng& rng) {
  Field W = white_noise_fourier(g, rng);
  return synthesize_stationary(lattice_eval(spec, g), W);
}

Field simulate_phi(const SpectralDensity& prior, const GridSpec& g, GaussianRng& rng) {
  return gaussian_field(prior, g, rng);
}

std::vector<Field> theta_from_phi(const Field& phi, const SpectralMultiplier& xi) {
  const GridSpec& g = phi.grid;
  std::vector<Field> theta;
  if (xi.kind == SpectralMultiplier::Kind::ones) {
    for (int j = 0; j < g.d; ++j) theta.push_back(phi);
    return theta;
  }
  Field phik = fft(phi);
  for (int j = 0; j < g.d; ++j) {
    cvec xk = lattice_multiplier(g, xi, j);
    Field tk = make_field(g, Domain::fourier);
    for (std::size_t i = 0; i < tk.v.size(); ++i) tk.v[i] = xk[i] * phik.v[i];
    Field tp = ifft(tk);
    for (auto& v : tp.v) v = cplx(v.real(), 0.0);
    theta.push_back(std::move(tp));
  }
  return theta;
}

SimResult simulate_Z(const rvec& Ck, const std::vector<rvec>& eta, const std::vector<Field>& theta,
                     const Field& W, const SimulateOptions& opt) {
  const GridSpec& g = W.grid;
  const int d = g.d;
  const std::size_t sz = g.size();
  if (Ck.size() != sz) throw ValidationError("simulate_Z: spectrum shape mismatch");
  if (static_cast<int>(theta.size()) != d) throw ValidationError("simulate_Z: theta needs d fields");

  double max_phase = 0.0;
  for (int p = 0; p < d; ++p) {
    double me = 0.0, mt = 0.0;
    for (double v : eta[p]) me = std::max(me, std::fabs(v));
    for (const auto& v : theta[p].v) mt = std::max(mt, std::fabs(v.real()));
    max_phase = std::max(max_phase, me * mt);
  }
  if (max_phase == 0.0 && !opt.force_direct) {
    // stationary limit: identical to the FFT synthesis, bit for bit
    SimResult res{synthesize_stationary(Ck, W), 0.0};
    return res;
  }
  if (sz > opt.pixel_cost_cap && !opt.force)
    throw CostCapError("simulate_Z: " + std::to_string(sz) +
                       " pixels exceeds the direct-sum cost cap of " +
                       std::to_string(opt.pixel_cost_cap) + " (use force to run anyway)");

  // amplitude per mode: a_k = sqrt(C_k) W_k / (2pi)^{d/2}; Hermitian pairs are
  // folded so each pixel sums 2 Re(a_k e^{i phase}) over half the lattice.
  struct Pair {
    double re, im;  // 2 * a_k
    double k0, k1;
    double e0, e1;  // eta at k
  };
  struct SelfConj {
    double a;  // real amplitude
    double k0, k1;
    double e0, e1;
  };
  std::vector<Pair> pairs;
  std::vector<SelfConj> selfs;
  const double norm = 1.0 / g.two_pi_half_d();
  for (std::size_t i = 0; i < sz; ++i) {
    if (opt.freq_cutoff > 0 && g.max_norm_radius(i) > opt.freq_cutoff) continue;
    std::size_t c = g.conj_index(i);
    auto k = g.freq(i);
    if (c == i) {
      SelfConj s;
      s.a = std::sqrt(Ck[i]) * W.v[i].real() * norm;
      s.k0 = k[0];
      s.k1 = k[1];
      s.e0 = eta[0][i];
      s.e1 = d == 2 ? eta[1][i] : 0.0;
      selfs.push_back(s);
    } else if (i < c) {
      cplx a = std::sqrt(Ck[i]) * W.v[i] * norm;
      Pair p;
      p.re = 2.0 * a.real();
      p.im = 2.0 * a.imag();
      p.k0 = k[0];
      p.k1 = k[1];
      p.e0 = eta[0][i];
      p.e1 = d == 2 ? eta[1][i] : 0.0;
      pairs.push_back(p);
    }
  }

  Field z = make_field(g, Domain::pixel);
  run_chunked(sz, opt.workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t ix = begin; ix < end; ++ix) {
      auto x = g.coord(ix);
      double t0 = theta[0].v[ix].real();
      double t1 = d == 2 ? theta[1].v[ix].real() : 0.0;
      double acc = 0.0;
      for (const Pair& p : pairs) {
        double phase = x[0] * p.k0 + x[1] * p.k1 + t0 * p.e0 + t1 * p.e1;
        acc += p.re * std::cos(phase) - p.im * std::sin(phase);
      }
      for (const SelfConj& s : selfs) {
        // phase factor forced real at self-conjugate frequencies
        acc += s.a * std::cos(x[0] * s.k0 + x[1] * s.k1) * std::cos(t0 * s.e0 + t1 * s.e1);
      }
      z.v[ix] = cplx(acc, 0.0);
    }
  });
  // the Hermitian fold discards the imaginary part exactly
  return SimResult{std::move(z), 0.0};
}

SimResult simulate_Z(const PhaseModel& m, const std::vector<Field>& theta, GaussianRng& rng,
                     const SimulateOptions& opt) {
  Field W = white_noise_fourier(m.grid, rng);
  return simulate_Z(m.Ck, m.eta_raw, theta, W, opt);
}

SimResult simulate_Z_tilde(const rvec& Ck, const Field& phi, const Field& W,
                           const SimulateOptions& opt) {
  const GridSpec& g = W.grid;
  if (g.d != 1) throw ValidationError("simulate_Z_tilde: defined for d=1 only");
  const std::size_t sz = g.size();
  if (sz > opt.pixel_cost_cap && !opt.force)
    throw CostCapError("simulate_Z_tilde: pixel count exceeds the cost cap");

  struct Mode {
    double re, im;  // 2 a_k (or a_k for self-conjugate)
    double k;
    double absk;
    bool self;
  };
  std::vector<Mode> modes;
  const double norm = 1.0 / g.two_pi_half_d();
  for (std::size_t i = 0; i < sz; ++i) {
    std::size_t c = g.conj_index(i);
    double k = g.freq(i)[0];
    if (c == i) {
      modes.push_back({std::sqrt(Ck[i]) * W.v[i].real() * norm, 0.0, k, std::fabs(k), true});
    } else if (i < c) {
      cplx a = std::sqrt(Ck[i]) * W.v[i] * norm;
      modes.push_back({2.0 * a.real(), 2.0 * a.imag(), k, std::fabs(k), false});
    }
  }
  Field z = make_field(g, Domain::pixel);
  run_chunked(sz, opt.workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t ix = begin; ix < end; ++ix) {
      double x = g.coord(ix)[0];
      double ph = phi.v[ix].real();
      double acc = 0.0;
      for (const Mode& mo : modes) {
        double amp = std::exp(ph * mo.absk);
        if (mo.self) {
          acc += mo.re * std::cos(x * mo.k) * amp;
        } else {
          double c = std::cos(x * mo.k), s = std::sin(x * mo.k);
          acc += amp * (mo.re * c - mo.im * s);
        }
      }
      z.v[ix] = cplx(acc, 0.0);
    }
  });
  return SimResult{std::move(z), 0.0};
}

Field add_noise(const Field& z, const SpectralDensity& Cnn, GaussianRng& rng) {
  if (Cnn.is_zero()) return z;
  Field noise = gaussian_field(Cnn, z.grid, rng);
  Field out = z;
  for (std::size_t i = 0; i < out.v.size(); ++i)
    out.v[i] = cplx(z.v[i].real() + noise.v[i].real(), 0.0);
  return out;
}

}  // namespace nonstat
