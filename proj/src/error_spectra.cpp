#include "nonstat/error_spectra.hpp"

#include <cmath>
#include <map>

#include "nonstat/errors.hpp"

namespace nonstat {

std::uint64_t kernel_model_hash(const EstimatorKernel& ker) {
  // FNV-1a over the byte images of the defining spectra
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](const void* data, std::size_t bytes) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < bytes; ++i) {
      h ^= p[i];
      h *= 1099511628211ULL;
    }
  };
  mix(&ker.model.grid.d, sizeof(int));
  mix(&ker.model.grid.n, sizeof(int));
  mix(&ker.model.grid.L, sizeof(double));
  mix(&ker.s, sizeof(double));
  mix(ker.model.Cobs.data(), ker.model.Cobs.size() * sizeof(double));
  mix(ker.mask.data(), ker.mask.size());
  for (const auto& b : ker.b) mix(b.data(), b.size() * sizeof(cplx));
  return h;
}

ErrorSpectra make_error_spectra(const EstimatorKernel& ker, CXXOption opt, bool exact,
                                std::size_t exact_cap) {
  ErrorSpectra out;
  out.grid = ker.model.grid;
  out.cxx = opt;
  out.model_hash = kernel_model_hash(ker);
  out.Cvar = var_spectrum(ker, opt);
  if (exact) {
    out.Cbias = bias_spectrum_exact(ker, exact_cap);
    out.bias_is_fast = false;
  } else {
    out.Cbias = bias_spectrum_fast(ker);
    out.bias_is_fast = true;
  }
  return out;
}

rvec cxx_spectrum(const EstimatorKernel& ker, CXXOption opt, std::size_t option2_cap) {
  switch (opt) {
    case CXXOption::matched:
      return ker.model.Cobs;
    case CXXOption::option1:
      return marginal_spectrum(ker.model, MarginalOption::option1);
    case CXXOption::option2:
      return marginal_spectrum(ker.model, MarginalOption::option2, option2_cap);
  }
  return ker.model.Cobs;
}

rvec var_spectrum(const EstimatorKernel& ker, CXXOption opt) {
  const GridSpec& g = ker.model.grid;
  const std::size_t sz = g.size();
  rvec cxx = cxx_spectrum(ker, opt);
  rvec w(sz, 0.0);
  for (std::size_t i = 0; i < sz; ++i)
    w[i] = cxx[i] * ker.invCobs[i] * ker.invCobs[i];  // zero at masked modes
  cvec qf = kernel_quadratic_form(ker, w);
  rvec out(sz, 0.0);
  const double tp = g.two_pi_half_d();
  for (std::size_t l = 0; l < sz; ++l)
    if (ker.validA[l]) out[l] = 2.0 * ker.A[l] * ker.A[l] * qf[l].real() / tp;
  return out;
}

rvec var_spectrum_direct(const EstimatorKernel& ker, CXXOption opt, std::size_t cost_cap) {
  const GridSpec& g = ker.model.grid;
  const std::size_t sz = g.size();
  if (sz > cost_cap) throw CostCapError("var_spectrum_direct: lattice exceeds the cost cap");
  rvec cxx = cxx_spectrum(ker, opt);
  rvec w(sz, 0.0);
  for (std::size_t i = 0; i < sz; ++i) w[i] = cxx[i] * ker.invCobs[i] * ker.invCobs[i];
  const double meas = g.dk_d() / std::pow(2.0 * M_PI, g.d);
  const std::size_t nb = ker.b.size();
  rvec out(sz, 0.0);
  for (std::size_t l = 0; l < sz; ++l) {
    if (!ker.validA[l]) continue;
    double acc = 0.0;
    for (std::size_t k = 0; k < sz; ++k) {
      std::size_t kl = g.add_wrap(k, l);
      cplx num(0, 0);
      for (std::size_t p = 0; p < nb; ++p)
        num += ker.mconj[p][l] * (ker.b[p][k] + ker.s * ker.b[p][kl]);
      acc += std::norm(num) * w[kl] * w[k];
    }
    out[l] = 2.0 * ker.A[l] * ker.A[l] * acc * meas;
  }
  return out;
}

namespace {

// ph_l{ C2w_k + s C2w_{k+w} } for one omega shift, all l (the local invariant
// variant has s = -1, giving the difference kernel of the bias formulas).
cvec weighting_of_shifted_C2(const EstimatorKernel& ker, std::size_t pq, std::size_t iw) {
  const GridSpec& g = ker.model.grid;
  const std::size_t sz = g.size();
  const rvec& c2 = ker.C2w[pq];
  cvec X(sz);
  for (std::size_t i = 0; i < sz; ++i)
    X[i] = cplx(c2[i] + ker.s * c2[g.add_wrap(i, iw)], 0.0);
  return apply_weighting_k(ker, X);
}

std::size_t sub_wrap(const GridSpec& g, std::size_t l, std::size_t w) {
  return g.add_wrap(l, g.conj_index(w));
}

}  // namespace

BiasWeightTable bias_weight_table(const EstimatorKernel& ker, std::size_t cost_cap) {
  const GridSpec& g = ker.model.grid;
  const std::size_t sz = g.size();
  if (sz > cost_cap)
    throw CostCapError("bias_weight_table: lattice exceeds the O(n^{2d}) cost cap");
  const std::size_t nbq = ker.C2w.size();
  BiasWeightTable t;
  t.G.assign(nbq, cvec(sz * sz));
  for (std::size_t iw = 0; iw < sz; ++iw)
    for (std::size_t pq = 0; pq < nbq; ++pq) {
      cvec gl = weighting_of_shifted_C2(ker, pq, iw);
      std::copy(gl.begin(), gl.end(), t.G[pq].begin() + iw * sz);
    }
  return t;
}

cvec bias_map(const EstimatorKernel& ker, const std::vector<cvec>& theta_fourier,
              const BiasWeightTable& table) {
  const GridSpec& g = ker.model.grid;
  const std::size_t sz = g.size();
  const int d = g.d;
  const std::size_t nbq = ker.C2w.size();
  const double meas = g.dk_d() / g.two_pi_half_d();
  cvec out(sz, cplx(0, 0));
  for (std::size_t iw = 0; iw < sz; ++iw) {
    for (std::size_t pq = 0; pq < nbq; ++pq) {
      // tilde variant collapses to a single component with theta = phi
      int p = (nbq == 1) ? 0 : static_cast<int>(pq) / d;
      int q = (nbq == 1) ? 0 : static_cast<int>(pq) % d;
      const cplx tp = theta_fourier[p][iw];
      if (tp == cplx(0, 0)) continue;
      const cvec& G = table.G[pq];
      for (std::size_t l = 0; l < sz; ++l) {
        cplx tq = theta_fourier[q][sub_wrap(g, l, iw)];
        out[l] += tp * tq * G[iw * sz + l];
      }
    }
  }
  for (std::size_t l = 0; l < sz; ++l)
    out[l] = ker.validA[l] ? 2.0 * meas * out[l] : cplx(0, 0);
  return out;
}

cvec bias_map(const EstimatorKernel& ker, const std::vector<cvec>& theta_fourier,
              std::size_t cost_cap) {
  const GridSpec& g = ker.model.grid;
  const std::size_t sz = g.size();
  if (sz > cost_cap) throw CostCapError("bias_map: lattice exceeds the O(n^{2d}) cost cap");
  const int d = g.d;
  const std::size_t nbq = ker.C2w.size();
  const double meas = g.dk_d() / g.two_pi_half_d();
  cvec out(sz, cplx(0, 0));
  for (std::size_t iw = 0; iw < sz; ++iw) {
    for (std::size_t pq = 0; pq < nbq; ++pq) {
      int p = (nbq == 1) ? 0 : static_cast<int>(pq) / d;
      int q = (nbq == 1) ? 0 : static_cast<int>(pq) % d;
      const cplx tp = theta_fourier[p][iw];
      if (tp == cplx(0, 0)) continue;
      cvec G = weighting_of_shifted_C2(ker, pq, iw);
      for (std::size_t l = 0; l < sz; ++l)
        out[l] += tp * theta_fourier[q][sub_wrap(g, l, iw)] * G[l];
    }
  }
  for (std::size_t l = 0; l < sz; ++l)
    out[l] = ker.validA[l] ? 2.0 * meas * out[l] : cplx(0, 0);
  return out;
}

rvec bias_spectrum_exact(const EstimatorKernel& ker, std::size_t cost_cap) {
  const GridSpec& g = ker.model.grid;
  const std::size_t sz = g.size();
  if (sz > cost_cap)
    throw CostCapError("bias_spectrum_exact: lattice exceeds the O(n^{2d}) cost cap");
  const int d = g.d;
  const bool tilde = ker.variant == Variant::tilde;
  const std::size_t nbq = ker.C2w.size();
  const auto& Ctt = ker.model.Ctt;

  cvec acc(sz, cplx(0, 0));
  std::vector<cvec> G(nbq);
  for (std::size_t iw = 0; iw < sz; ++iw) {
    for (std::size_t pq = 0; pq < nbq; ++pq) G[pq] = weighting_of_shifted_C2(ker, pq, iw);
    for (std::size_t l = 0; l < sz; ++l) {
      if (!ker.validA[l]) continue;
      std::size_t lw = sub_wrap(g, l, iw);
      cplx sum(0, 0);
      if (tilde || d == 1) {
        cplx pair = Ctt[0][iw] * Ctt[0][lw];
        sum = 2.0 * pair * G[0][l] * std::conj(G[0][l]);
      } else {
        for (int p = 0; p < d; ++p)
          for (int q = 0; q < d; ++q)
            for (int pp = 0; pp < d; ++pp)
              for (int qq = 0; qq < d; ++qq) {
                cplx pairs = Ctt[p * d + pp][iw] * Ctt[q * d + qq][lw] +
                             Ctt[p * d + qq][iw] * Ctt[q * d + pp][lw];
                sum += pairs * G[p * d + q][l] * std::conj(G[pp * d + qq][l]);
              }
      }
      acc[l] += sum;
    }
  }
  const double meas = 4.0 * g.dk_d() / std::pow(2.0 * M_PI, g.d);
  rvec out(sz, 0.0);
  double mx = 0.0;
  for (std::size_t l = 0; l < sz; ++l) mx = std::max(mx, std::fabs(acc[l].real()));
  for (std::size_t l = 0; l < sz; ++l) {
    if (!ker.validA[l]) continue;
    double v = meas * acc[l].real();
    out[l] = (v < 0.0 && v > -1e-10 * meas * mx) ? 0.0 : v;
  }
  return out;
}

rvec bias_spectrum_fast(const EstimatorKernel& ker) {
  if (ker.variant != Variant::local_invariant)
    throw ValidationError("bias_spectrum_fast: the Taylor fast path covers the local invariant variant");
  const GridSpec& g = ker.model.grid;
  const std::size_t sz = g.size();
  const int d = g.d;
  const auto& Ctt = ker.model.Ctt;
  const double tp = g.two_pi_half_d();

  // monomials in omega: {w_a} then {w_a w_b, a <= b}
  struct Monomial {
    int a, b;  // b = -1 for degree one
  };
  std::vector<Monomial> mono;
  for (int a = 0; a < d; ++a) mono.push_back({a, -1});
  for (int a = 0; a < d; ++a)
    for (int b = a; b < d; ++b) mono.push_back({a, b});
  const std::size_t nm = mono.size();

  std::vector<rvec> mono_vals(nm, rvec(sz, 0.0));
  for (std::size_t m = 0; m < nm; ++m)
    for (std::size_t i = 0; i < sz; ++i) {
      auto k = g.freq(i);
      mono_vals[m][i] = (mono[m].b < 0) ? k[mono[m].a] : k[mono[m].a] * k[mono[m].b];
    }

  // Second-order surrogate for the weighting of C2_k - C2_{k+w}. The change
  // of variables k -> -k-l forces the exact symmetry w <-> l-w on that
  // weighting, and the same symmetry ties the gradient coefficient to the
  // Hessian one (g1 = -1/2 g2 l, exact to this Taylor order). Evaluating the
  // quadratic in the symmetric form
  //     G(l,w) ~ -1/2 (w - l/2)^T g2(l) (w - l/2) + 1/8 l^T g2(l) l
  //            = -1/2 w^T g2 w + 1/2 w^T g2 l
  // keeps the mirrored integrand lobe at w ~ l consistent; the raw (g1, g2)
  // pair drifts off that symmetry and overweights it at moderate l.
  std::vector<std::vector<cvec>> g2w(d * d, std::vector<cvec>(d * d));
  for (int p = 0; p < d; ++p)
    for (int q = 0; q < d; ++q) {
      const rvec& c2 = ker.C2w[p * d + q];
      std::vector<rvec> grad(d);
      for (int a = 0; a < d; ++a) grad[a] = lattice_derivative_signed(g, c2, a);
      for (int a = 0; a < d; ++a)
        for (int b = a; b < d; ++b) {
          rvec hess = lattice_derivative_signed(g, grad[a], b);
          if (a != b) {
            rvec hess_ba = lattice_derivative_signed(g, grad[b], a);
            for (std::size_t i = 0; i < sz; ++i) hess[i] = 0.5 * (hess[i] + hess_ba[i]);
          }
          cvec wl = apply_weighting_k(ker, hess);
          g2w[p * d + q][a * d + b] = wl;
          g2w[p * d + q][b * d + a] = std::move(wl);
        }
    }
  std::vector<std::vector<cvec>> h(d * d, std::vector<cvec>(nm, cvec(sz, cplx(0, 0))));
  for (int pq = 0; pq < d * d; ++pq)
    for (std::size_t m = 0; m < nm; ++m) {
      if (mono[m].b < 0) {
        // coefficient of w_a: +1/2 sum_b g2_ab l_b
        int a = mono[m].a;
        for (std::size_t l = 0; l < sz; ++l) {
          auto lv = g.freq(l);
          cplx acc(0, 0);
          for (int b = 0; b < d; ++b) acc += g2w[pq][a * d + b][l] * lv[b];
          h[pq][m][l] = 0.5 * acc;
        }
      } else {
        int a = mono[m].a, b = mono[m].b;
        double fac = (a == b) ? 0.5 : 1.0;  // off-diagonal terms appear twice
        for (std::size_t l = 0; l < sz; ++l) h[pq][m][l] = -fac * g2w[pq][a * d + b][l];
      }
    }

  // convolution kernels Conv(Ctt_ab * mu_m mu_m', Ctt_cd), cached per key
  auto ifft_of = [&](const cvec& arr) {
    Field f = make_field(g, Domain::fourier);
    f.v = arr;
    return ifft(f).v;
  };
  std::vector<cvec> Q(d * d);
  for (int ab = 0; ab < d * d; ++ab) Q[ab] = ifft_of(Ctt[ab]);

  std::map<std::pair<int, std::size_t>, cvec> P;  // (ab, product index) -> pixel array
  auto prod_index = [&](std::size_t m, std::size_t mp) {
    std::size_t lo = std::min(m, mp), hi = std::max(m, mp);
    return lo * nm + hi;
  };
  auto P_of = [&](int ab, std::size_t m, std::size_t mp) -> const cvec& {
    auto key = std::make_pair(ab, prod_index(m, mp));
    auto it = P.find(key);
    if (it != P.end()) return it->second;
    cvec arr(sz);
    for (std::size_t i = 0; i < sz; ++i)
      arr[i] = Ctt[ab][i] * mono_vals[m][i] * mono_vals[mp][i];
    return P.emplace(key, ifft_of(arr)).first->second;
  };
  std::map<std::tuple<int, int, std::size_t>, cvec> K;
  auto K_of = [&](int ab, int cd, std::size_t m, std::size_t mp) -> const cvec& {
    auto key = std::make_tuple(ab, cd, prod_index(m, mp));
    auto it = K.find(key);
    if (it != K.end()) return it->second;
    const cvec& pa = P_of(ab, m, mp);
    Field prod = make_field(g, Domain::pixel);
    for (std::size_t i = 0; i < sz; ++i) prod.v[i] = pa[i] * Q[cd][i];
    cvec conv = fft(prod).v;
    for (auto& z : conv) z *= tp;  // Conv(u,v) = (2pi)^{d/2} fft(ifft u * ifft v)
    return K.emplace(key, std::move(conv)).first->second;
  };

  cvec acc(sz, cplx(0, 0));
  for (int p = 0; p < d; ++p)
    for (int q = 0; q < d; ++q)
      for (int pp = 0; pp < d; ++pp)
        for (int qq = 0; qq < d; ++qq)
          for (std::size_t m = 0; m < nm; ++m)
            for (std::size_t mp = 0; mp < nm; ++mp) {
              const cvec& k1 = K_of(p * d + pp, q * d + qq, m, mp);
              const cvec& k2 = K_of(p * d + qq, q * d + pp, m, mp);
              const cvec& hm = h[p * d + q][m];
              const cvec& hmp = h[pp * d + qq][mp];
              for (std::size_t l = 0; l < sz; ++l)
                acc[l] += hm[l] * std::conj(hmp[l]) * (k1[l] + k2[l]);
            }

  const double meas = 4.0 / std::pow(2.0 * M_PI, g.d);
  rvec out(sz, 0.0);
  double mx = 0.0;
  for (std::size_t l = 0; l < sz; ++l) mx = std::max(mx, std::fabs(acc[l].real()));
  for (std::size_t l = 0; l < sz; ++l) {
    if (!ker.validA[l]) continue;
    double v = meas * acc[l].real();
    out[l] = (v < 0.0 && v > -1e-10 * meas * mx) ? 0.0 : v;
  }
  return out;
}

}  // namespace nonstat
