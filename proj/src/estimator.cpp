#include "nonstat/estimator.hpp"

#include <cmath>

#include "nonstat/errors.hpp"

namespace nonstat {

std::vector<std::uint8_t> nyquist_mask(const GridSpec& g, double fraction) {
  if (!(fraction >= 0.0 && fraction < 1.0))
    throw ValidationError("nyquist_mask: fraction must be in [0,1)");
  std::vector<std::uint8_t> mask(g.size(), 0);
  if (fraction == 0.0) return mask;
  int threshold = static_cast<int>(std::ceil((1.0 - fraction) * (g.n / 2)));
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (g.max_norm_radius(i) >= threshold) mask[i] = 1;
  return mask;
}

cvec lattice_xcorr(const GridSpec& g, const cvec& u, const cvec& v) {
  Field fu = make_field(g, Domain::fourier);
  fu.v = u;
  Field fv = make_field(g, Domain::fourier);
  fv.v = flip(g, v);
  Field pu = ifft(fu);
  Field pv = ifft(fv);
  Field prod = make_field(g, Domain::pixel);
  for (std::size_t i = 0; i < prod.v.size(); ++i) prod.v[i] = pu.v[i] * pv.v[i];
  return fft(prod).v;
}

cvec kernel_quadratic_form(const EstimatorKernel& ker, const rvec& w) {
  const GridSpec& g = ker.model.grid;
  const std::size_t sz = g.size();
  const std::size_t nb = ker.b.size();
  cvec total(sz, cplx(0, 0));
  cvec wb(w.begin(), w.end());
  for (std::size_t p = 0; p < nb; ++p) {
    for (std::size_t q = 0; q < nb; ++q) {
      cvec bpbqw(sz), bpw(sz), bqw(sz);
      for (std::size_t i = 0; i < sz; ++i) {
        bpbqw[i] = ker.b[p][i] * std::conj(ker.b[q][i]) * w[i];
        bpw[i] = ker.b[p][i] * w[i];
        bqw[i] = std::conj(ker.b[q][i]) * w[i];
      }
      cvec t1 = lattice_xcorr(g, wb, bpbqw);
      cvec t2 = lattice_xcorr(g, bpbqw, wb);
      cvec t3 = lattice_xcorr(g, bpw, bqw);
      cvec t4 = lattice_xcorr(g, bqw, bpw);
      for (std::size_t l = 0; l < sz; ++l) {
        cplx m = ker.mconj[p][l] * std::conj(ker.mconj[q][l]);
        total[l] += m * (t1[l] + t2[l] + ker.s * (t3[l] + t4[l]));
      }
    }
  }
  return total;
}

namespace {

void flag_validity(EstimatorKernel& ker, const cvec& Ainv) {
  const std::size_t sz = ker.model.grid.size();
  ker.A.assign(sz, 0.0);
  ker.validA.assign(sz, 0);
  double max_ainv = 0.0;
  for (const auto& z : Ainv) max_ainv = std::max(max_ainv, std::fabs(z.real()));
  const double floor = 1e-12 * max_ainv;
  for (std::size_t l = 0; l < sz; ++l) {
    double re = Ainv[l].real();
    if (l == 0 || !(re > floor)) continue;  // l=0 undefined; nonpositive flagged invalid
    ker.A[l] = 1.0 / re;
    ker.validA[l] = 1;
  }
}

}  // namespace

EstimatorKernel build_kernel(const PhaseModel& m, const std::vector<std::uint8_t>& mask,
                             Variant variant) {
  const GridSpec& g = m.grid;
  const std::size_t sz = g.size();
  const int d = g.d;
  if (mask.size() != sz) throw ValidationError("build_kernel: mask shape mismatch");
  EstimatorKernel ker;
  ker.model = m;
  ker.variant = variant;
  ker.mask = mask;
  // a frequency and its conjugate carry the same information for real fields;
  // the fast path relies on the mask being even in k
  for (std::size_t i = 0; i < sz; ++i)
    if (ker.mask[i]) ker.mask[g.conj_index(i)] = 1;
  ker.s = variant == Variant::tilde ? 1.0 : -1.0;

  ker.invCobs.assign(sz, 0.0);
  for (std::size_t i = 0; i < sz; ++i) {
    if (ker.mask[i]) continue;
    if (!(m.Cobs[i] > 0.0))
      throw ValidationError("build_kernel: marginal spectrum must be positive at unmasked modes");
    ker.invCobs[i] = 1.0 / m.Cobs[i];
  }

  if (variant == Variant::local_invariant) {
    ker.b.assign(d, cvec(sz));
    ker.mconj.assign(d, cvec(sz));
    for (int p = 0; p < d; ++p)
      for (std::size_t i = 0; i < sz; ++i) {
        ker.mconj[p][i] = std::conj(m.xi_k[p][i]);
        ker.b[p][i] = std::conj(m.C1[p][i]);
      }
    ker.C2w = m.C2;
  } else {
    if (d != 1) throw ValidationError("build_kernel: tilde variant is defined for d=1");
    ker.b.assign(1, cvec(sz));
    ker.mconj.assign(1, cvec(sz, cplx(1.0, 0.0)));
    for (std::size_t i = 0; i < sz; ++i) ker.b[0][i] = std::abs(m.C1[0][i]);
    ker.C2w.assign(1, rvec(sz));
    for (std::size_t i = 0; i < sz; ++i) ker.C2w[0][i] = -m.C2[0][i];
  }

  cvec Ainv = kernel_quadratic_form(ker, ker.invCobs);
  flag_validity(ker, Ainv);
  return ker;
}

rvec normalization_direct(const EstimatorKernel& ker) {
  const GridSpec& g = ker.model.grid;
  const std::size_t sz = g.size();
  const std::size_t nb = ker.b.size();
  const double meas = g.dk_d() / g.two_pi_half_d();
  rvec out(sz, 0.0);
  for (std::size_t l = 0; l < sz; ++l) {
    double acc = 0.0;
    for (std::size_t k = 0; k < sz; ++k) {
      std::size_t kl = g.add_wrap(k, l);
      cplx num(0, 0);
      for (std::size_t p = 0; p < nb; ++p)
        num += ker.mconj[p][l] * (ker.b[p][k] + ker.s * ker.b[p][kl]);
      acc += std::norm(num) * ker.invCobs[kl] * ker.invCobs[k];
    }
    out[l] = acc * meas;
  }
  return out;
}

Field estimate_fast(const Field& zobs, const EstimatorKernel& ker) {
  const GridSpec& g = ker.model.grid;
  if (zobs.domain != Domain::pixel) throw ValidationError("estimate_fast: expects a pixel field");
  const std::size_t sz = g.size();
  Field zk = fft(zobs);
  cvec G(sz);
  for (std::size_t i = 0; i < sz; ++i) G[i] = zk.v[i] * ker.invCobs[i];
  cvec Gflip = flip(g, G);

  Field out = make_field(g, Domain::fourier);
  const std::size_t nb = ker.b.size();
  for (std::size_t p = 0; p < nb; ++p) {
    cvec bpGflip(sz), bpG(sz);
    for (std::size_t i = 0; i < sz; ++i) {
      bpGflip[i] = ker.b[p][i] * Gflip[i];
      bpG[i] = ker.b[p][i] * G[i];
    }
    cvec t1 = lattice_xcorr(g, G, bpGflip);
    cvec t2 = lattice_xcorr(g, bpG, Gflip);
    for (std::size_t l = 0; l < sz; ++l)
      out.v[l] += ker.mconj[p][l] * (t1[l] + ker.s * t2[l]);
  }
  for (std::size_t l = 0; l < sz; ++l) out.v[l] = ker.validA[l] ? ker.A[l] * out.v[l] : cplx(0, 0);
  return out;
}

Field estimate_direct(const Field& zobs, const EstimatorKernel& ker, std::size_t cost_cap) {
  const GridSpec& g = ker.model.grid;
  const std::size_t sz = g.size();
  if (sz > cost_cap)
    throw CostCapError("estimate_direct: lattice exceeds the O(n^{2d}) cost cap of " +
                       std::to_string(cost_cap));
  Field zk = fft(zobs);
  const double meas = g.dk_d() / g.two_pi_half_d();
  const std::size_t nb = ker.b.size();
  Field out = make_field(g, Domain::fourier);
  for (std::size_t l = 0; l < sz; ++l) {
    if (!ker.validA[l]) continue;
    cplx acc(0, 0);
    for (std::size_t k = 0; k < sz; ++k) {
      std::size_t kl = g.add_wrap(k, l);
      cplx num(0, 0);
      for (std::size_t p = 0; p < nb; ++p)
        num += ker.mconj[p][l] * (ker.b[p][k] + ker.s * ker.b[p][kl]);
      acc += num * zk.v[kl] * zk.v[g.conj_index(k)] * (ker.invCobs[kl] * ker.invCobs[k]);
    }
    out.v[l] = ker.A[l] * acc * meas;
  }
  return out;
}

cvec apply_weighting(const EstimatorKernel& ker,
                     const std::function<cplx(std::size_t, std::size_t)>& X,
                     std::size_t cost_cap) {
  const GridSpec& g = ker.model.grid;
  const std::size_t sz = g.size();
  if (sz > cost_cap)
    throw CostCapError("apply_weighting: lattice exceeds the O(n^{2d}) cost cap");
  const double meas = g.dk_d() / g.two_pi_half_d();
  const std::size_t nb = ker.b.size();
  cvec out(sz, cplx(0, 0));
  for (std::size_t l = 0; l < sz; ++l) {
    if (!ker.validA[l]) continue;
    cplx acc(0, 0);
    for (std::size_t k = 0; k < sz; ++k) {
      std::size_t kl = g.add_wrap(k, l);
      cplx num(0, 0);
      for (std::size_t p = 0; p < nb; ++p)
        num += ker.mconj[p][l] * (ker.b[p][k] + ker.s * ker.b[p][kl]);
      acc += num * X(k, l) * (ker.invCobs[kl] * ker.invCobs[k]);
    }
    out[l] = ker.A[l] * acc * meas;
  }
  return out;
}

cvec apply_weighting_k(const EstimatorKernel& ker, const cvec& X) {
  const GridSpec& g = ker.model.grid;
  const std::size_t sz = g.size();
  const std::size_t nb = ker.b.size();
  cvec XB(sz);
  for (std::size_t i = 0; i < sz; ++i) XB[i] = X[i] * ker.invCobs[i];
  cvec wB(ker.invCobs.begin(), ker.invCobs.end());
  cvec out(sz, cplx(0, 0));
  for (std::size_t p = 0; p < nb; ++p) {
    cvec bpXB(sz), bpB(sz);
    for (std::size_t i = 0; i < sz; ++i) {
      bpXB[i] = ker.b[p][i] * XB[i];
      bpB[i] = ker.b[p][i] * ker.invCobs[i];
    }
    cvec t1 = lattice_xcorr(g, wB, bpXB);
    cvec t2 = lattice_xcorr(g, bpB, XB);
    for (std::size_t l = 0; l < sz; ++l)
      out[l] += ker.mconj[p][l] * (t1[l] + ker.s * t2[l]);
  }
  for (std::size_t l = 0; l < sz; ++l) out[l] = ker.validA[l] ? ker.A[l] * out[l] : cplx(0, 0);
  return out;
}

cvec apply_weighting_k(const EstimatorKernel& ker, const rvec& X) {
  cvec xc(X.begin(), X.end());
  return apply_weighting_k(ker, xc);
}

cvec apply_weighting_pair(const EstimatorKernel& ker, const cvec& X, const cvec& Y) {
  const GridSpec& g = ker.model.grid;
  const std::size_t sz = g.size();
  const std::size_t nb = ker.b.size();
  cvec XB(sz), YflipB(sz);
  cvec Yflip = flip(g, Y);
  for (std::size_t i = 0; i < sz; ++i) {
    XB[i] = X[i] * ker.invCobs[i];
    YflipB[i] = Yflip[i] * ker.invCobs[i];
  }
  cvec out(sz, cplx(0, 0));
  for (std::size_t p = 0; p < nb; ++p) {
    cvec bpYflipB(sz), bpXB(sz);
    for (std::size_t i = 0; i < sz; ++i) {
      bpYflipB[i] = ker.b[p][i] * YflipB[i];
      bpXB[i] = ker.b[p][i] * XB[i];
    }
    cvec t1 = lattice_xcorr(g, XB, bpYflipB);
    cvec t2 = lattice_xcorr(g, bpXB, YflipB);
    for (std::size_t l = 0; l < sz; ++l)
      out[l] += ker.mconj[p][l] * (t1[l] + ker.s * t2[l]);
  }
  for (std::size_t l = 0; l < sz; ++l) out[l] = ker.validA[l] ? ker.A[l] * out[l] : cplx(0, 0);
  return out;
}

}  // namespace nonstat
