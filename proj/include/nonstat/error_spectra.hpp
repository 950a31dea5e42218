#ifndef NONSTAT_ERROR_SPECTRA_HPP
#define NONSTAT_ERROR_SPECTRA_HPP

#include "nonstat/estimator.hpp"

namespace nonstat {

// Shape-plus-observation-noise spectrum entering the variance formula:
//   option1: Cnn + C            (zeroth-order shape noise)
//   option2: Cnn + CZZm         (prior-marginalized shape noise)
//   matched: the kernel's own Cobs, for which Cvar = 2 (2pi)^{-d/2} A_l.
enum class CXXOption { option1, option2, matched };

struct ErrorSpectra {
  rvec Cvar;
  rvec Cbias;
  bool bias_is_fast = false;
  CXXOption cxx = CXXOption::matched;
  GridSpec grid;
  std::uint64_t model_hash = 0;  // provenance: hash of the kernel's spectra
};

// Bundle of both error spectra for a kernel. The bias column is the fast
// Taylor path unless `exact` is requested (and the lattice fits the cap).
ErrorSpectra make_error_spectra(const EstimatorKernel& k, CXXOption opt, bool exact = false,
                                std::size_t exact_cap = std::size_t(1) << 13);

// provenance hash over the kernel-defining arrays
std::uint64_t kernel_model_hash(const EstimatorKernel& k);

rvec cxx_spectrum(const EstimatorKernel& k, CXXOption opt,
                  std::size_t option2_cap = std::size_t(1) << 13);

// Analytic variance spectrum, FFT evaluation; zero at invalid l.
rvec var_spectrum(const EstimatorKernel& k, CXXOption opt = CXXOption::matched);
// Literal double-sum evaluation (oracle path).
rvec var_spectrum_direct(const EstimatorKernel& k, CXXOption opt = CXXOption::matched,
                         std::size_t cost_cap = std::size_t(1) << 12);

// Exact conditional second-order bias map for given theta (fourier arrays):
//   2 sum_pq sum_w theta_{p,w} theta_{q,l-w} ph_l{C2_k - C2_{k+w}} dw/(2pi)^{d/2}
// (plus-sign combination for the tilde variant).
cvec bias_map(const EstimatorKernel& k, const std::vector<cvec>& theta_fourier,
              std::size_t cost_cap = std::size_t(1) << 13);

// Precomputed weighting table G_{pq}(l,w) for repeated bias maps; memory is
// d^2 n^{2d} complex entries, capped.
struct BiasWeightTable {
  std::vector<cvec> G;  // [p*d+q][w*size + l]
};
BiasWeightTable bias_weight_table(const EstimatorKernel& k,
                                  std::size_t cost_cap = std::size_t(1) << 13);
cvec bias_map(const EstimatorKernel& k, const std::vector<cvec>& theta_fourier,
              const BiasWeightTable& table);

// Exact second-order bias spectrum (O(n^{2d}) with FFT inner loops).
rvec bias_spectrum_exact(const EstimatorKernel& k, std::size_t cost_cap = std::size_t(1) << 13);

// Taylor-approximated fast bias spectrum (local invariant variant only).
rvec bias_spectrum_fast(const EstimatorKernel& k);

}  // namespace nonstat

#endif
