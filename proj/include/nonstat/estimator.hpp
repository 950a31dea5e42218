#ifndef NONSTAT_ESTIMATOR_HPP
#define NONSTAT_ESTIMATOR_HPP

#include <cstdint>
#include <functional>

#include "nonstat/grid.hpp"
#include "nonstat/spectral.hpp"

namespace nonstat {

// Which first-order pair weight the quadratic estimate uses:
//   local_invariant:  (xi_l . (C1_k - C1_{k+l}))^*   over  Cobs_{k+l} Cobs_k
//   tilde:            (Ct1_k + Ct1_{k+l})            over  Cobs_{k+l} Cobs_k
// with Ct1 = |C1| (the non locally invariant comparison estimate).
enum class Variant { local_invariant, tilde };

// Pair weights factored as sum_p m_p(l) (b_p(k) + s b_p(k+l)); s = -1 for the
// local invariant variant and +1 for the tilde variant. Frequency masking is
// realized by zeroing invCobs at masked k, which removes the frequency from
// every pair it enters, in the normalization and the estimate alike.
struct EstimatorKernel {
  PhaseModel model;
  Variant variant = Variant::local_invariant;
  double s = -1.0;
  std::vector<std::uint8_t> mask;  // per lattice frequency
  rvec invCobs;                    // 1/Cobs, zero at masked entries
  std::vector<cvec> b;             // weight components over k
  std::vector<cvec> mconj;         // m_p tabulated over l
  std::vector<rvec> C2w;           // second-order weights (tilde: -C2)
  rvec A;                          // normalization, 0 where invalid
  std::vector<std::uint8_t> validA;
};

// Marks the top `fraction` of lattice frequencies by per-axis max-norm index
// radius: masked iff radius >= ceil((1-fraction) n/2). fraction in [0,1).
std::vector<std::uint8_t> nyquist_mask(const GridSpec& g, double fraction);

EstimatorKernel build_kernel(const PhaseModel& m, const std::vector<std::uint8_t>& mask,
                             Variant variant = Variant::local_invariant);

// A_l^{-1} by the literal double sum (oracle path, no FFT).
rvec normalization_direct(const EstimatorKernel& k);

// phihat_l as a fourier Field; invalid l (l=0, nonpositive or all-masked
// normalization) are returned as zero and flagged in kernel.validA.
Field estimate_fast(const Field& zobs_pixel, const EstimatorKernel& k);
Field estimate_direct(const Field& zobs_pixel, const EstimatorKernel& k,
                      std::size_t cost_cap = std::size_t(1) << 12);

// The generic weighting functional: the estimate applied to a function X of
// (k,l), a function of k alone, or a pair X_{k+l} Y_{-k}.
cvec apply_weighting(const EstimatorKernel& k,
                     const std::function<cplx(std::size_t, std::size_t)>& X,
                     std::size_t cost_cap = std::size_t(1) << 12);
cvec apply_weighting_k(const EstimatorKernel& k, const cvec& X);
cvec apply_weighting_k(const EstimatorKernel& k, const rvec& X);
cvec apply_weighting_pair(const EstimatorKernel& k, const cvec& X, const cvec& Y);

// sum_k u_{k+l} v_k dk^d/(2pi)^{d/2} for all l, via FFTs.
cvec lattice_xcorr(const GridSpec& g, const cvec& u, const cvec& v);

// sum_k |sum_p m_p(l) (b_p(k) + s b_p(k+l))|^2 w(k+l) w(k) dk^d/(2pi)^{d/2}
// for all l. With w = invCobs this is A_l^{-1}; the variance spectrum uses
// w = CXX / Cobs^2.
cvec kernel_quadratic_form(const EstimatorKernel& k, const rvec& w);

}  // namespace nonstat

#endif
