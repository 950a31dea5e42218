#ifndef NONSTAT_SIMULATE_HPP
#define NONSTAT_SIMULATE_HPP

#include "nonstat/grid.hpp"
#include "nonstat/spectral.hpp"

namespace nonstat {

// Stationary Gaussian field with spectral density `spec`, drawn exactly on
// the periodic grid: pixel field = ifft(sqrt(spec) * W / dk^d).
Field gaussian_field(const SpectralDensity& spec, const GridSpec& g, GaussianRng& rng);
Field gaussian_field_from_noise(const rvec& spec_lattice, const Field& W);

// phi from the prior (alias of gaussian_field, kept for the model wiring).
Field simulate_phi(const SpectralDensity& prior, const GridSpec& g, GaussianRng& rng);

// theta_{j,k} = xi_{j,k} phi_k, returned as d real pixel fields.
std::vector<Field> theta_from_phi(const Field& phi, const SpectralMultiplier& xi);

struct SimulateOptions {
  std::size_t pixel_cost_cap = 200000;  // refuse the O(n^{2d}) loop above this
  bool force = false;                   // lift the cap
  bool force_direct = false;            // run the double loop even when stationary
  int workers = 1;                      // x-chunks; output independent of the count
  int freq_cutoff = 0;                  // if > 0, drop modes with max-norm index radius > cutoff
};

struct SimResult {
  Field z;               // real pixel field
  double imag_residual;  // RMS of the discarded imaginary part over RMS(z)
};

// Nonstationary spectral phase field
//   Z(x) = Re sum_k e^{i x.k} e^{i theta(x).eta_k} sqrt(C_k) W_k / (2pi)^{d/2}
// evaluated by a direct Riemann sum over the lattice (O(n^{2d})), chunked over
// pixels. W is one shared Hermitian white-noise draw (E|W_k|^2 = dk^d).
// Self-conjugate frequencies use a real phase factor cos(theta.eta) so the sum
// is real by construction. When the phase vanishes identically the FFT
// synthesis is used and matches the stationary draw bit for bit.
SimResult simulate_Z(const rvec& Ck, const std::vector<rvec>& eta, const std::vector<Field>& theta,
                     const Field& W, const SimulateOptions& opt = {});

// Convenience wrapper drawing W internally.
SimResult simulate_Z(const PhaseModel& m, const std::vector<Field>& theta, GaussianRng& rng,
                     const SimulateOptions& opt = {});

// Non locally invariant comparison process (d=1 only):
//   Ztilde(t) = Re sum_k e^{i t k} e^{phi(t) |k|} sqrt(C_k) W_k / sqrt(2pi)
SimResult simulate_Z_tilde(const rvec& Ck, const Field& phi, const Field& W,
                           const SimulateOptions& opt = {});

// Adds an independent stationary Gaussian draw with spectral density Cnn.
// A zero noise spectrum is a no-op and consumes no randomness.
Field add_noise(const Field& z, const SpectralDensity& Cnn, GaussianRng& rng);

}  // namespace nonstat

#endif
