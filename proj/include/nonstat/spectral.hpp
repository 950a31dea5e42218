#ifndef NONSTAT_SPECTRAL_HPP
#define NONSTAT_SPECTRAL_HPP

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "nonstat/grid.hpp"

namespace nonstat {

// Shape-preserving (Fritsch-Carlson) cubic interpolant over an increasing
// abscissa table, with flat extrapolation outside the table range.
struct MonotoneCubic {
  rvec x, y, slope;
  static MonotoneCubic fit(rvec xs, rvec ys);
  double eval(double t) const;
};

// Nonnegative even function of frequency, evaluated at |k|.
struct SpectralDensity {
  enum class Kind { matern, tabulated, constant };
  Kind kind = Kind::constant;

  // matern parameters (Kind::matern)
  double nu = 0, rho = 0, sigma2 = 0;
  int dim = 1;
  double amp = 0;  // sigma^2 2^d pi^{d/2} Gamma(nu+d/2)/Gamma(nu) (4nu/rho^2)^nu
  double a = 0;    // 4 nu / rho^2

  double value = 0;  // Kind::constant

  MonotoneCubic table;  // Kind::tabulated

  double operator()(double knorm) const;
  bool is_zero() const { return kind == Kind::constant && value == 0.0; }
};

// C(|k|) = sigma^2 2^d pi^{d/2} (Gamma(nu+d/2)/Gamma(nu)) (4nu/rho^2)^nu
//          (4nu/rho^2 + |k|^2)^{-nu-d/2}
SpectralDensity matern(double nu, double rho, double sigma2, int d);
SpectralDensity constant_density(double value);
SpectralDensity zero_density();
SpectralDensity tabulated_density(rvec r, rvec val);

// Per-coordinate spectral multiplier xi_{j,k}, Hermitian in k.
struct SpectralMultiplier {
  enum class Kind { gradient, ones, rot_gradient };
  Kind kind = Kind::gradient;
  cplx eval(int j, const std::array<double, 2>& k) const;
};

// Odd vector field eta_k; isotropic-radial in all built-in constructions.
struct EtaField {
  enum class Kind { zero, linear, radial };
  Kind kind = Kind::zero;
  std::function<double(double)> radial;  // eta(r) for r >= 0, odd extension
  std::array<double, 2> eval(const std::array<double, 2>& k) const;
};

EtaField zero_eta();
EtaField linear_eta();  // eta_k = k
EtaField radial_eta(std::function<double(double)> fn);
EtaField tabulated_eta(rvec r, rvec val);

enum class MarginalOption { option1, option2 };

// Bundle of model ingredients with every derived spectrum tabulated on the
// lattice. eta_raw keeps the radial evaluation at every lattice point; the
// kernel copies (eta_kernel, C1, C2) zero the self-conjugate frequencies so
// Fourier arrays built from them carry exact discrete Hermitian symmetry.
struct PhaseModel {
  GridSpec grid;
  SpectralDensity C, prior, noise;
  EtaField eta;
  SpectralMultiplier xi;
  MarginalOption marginal = MarginalOption::option1;

  rvec Ck;                    // C at |k|
  std::vector<rvec> eta_raw;  // d arrays
  std::vector<rvec> eta_kernel;
  rvec C0;                // C_k / (2pi)^{d/2}
  std::vector<cvec> C1;   // d arrays, i eta_p C /(2pi)^{d/2}
  std::vector<rvec> C2;   // d*d arrays [p*d+q], -eta_p eta_q C /(2 (2pi)^{d/2})
  std::vector<cvec> xi_k; // d arrays: xi on the lattice, zeroed on Nyquist rows
  std::vector<cvec> Ctt;  // d*d arrays, xi_p xi_q^* Cphi
  rvec Cphi;
  rvec Cnn;
  rvec Cobs;  // marginal spectrum of the observations
};

// xi evaluated on the lattice with every frequency that carries a Nyquist
// coordinate zeroed (for frequency-dependent kinds), so multiplier arrays are
// exactly Hermitian and vector identities (curl/divergence) hold discretely.
cvec lattice_multiplier(const GridSpec& g, const SpectralMultiplier& xi, int j);

// C0, C1, C2 from lattice tables of C and eta.
void derive_expansion(const GridSpec& g, const rvec& Ck, const std::vector<rvec>& eta,
                      rvec& C0, std::vector<cvec>& C1, std::vector<rvec>& C2);

// Marginal observation spectrum. option1: C + Cnn. option2: the exact
// discrete phase-damped marginal, O(n^{2d}); refused above the cost cap.
rvec marginal_spectrum(const PhaseModel& m, MarginalOption opt,
                       std::size_t cost_cap = std::size_t(1) << 13);

PhaseModel build_phase_model(const GridSpec& g, const SpectralDensity& C, const EtaField& eta,
                             const SpectralMultiplier& xi, const SpectralDensity& prior,
                             const SpectralDensity& noise, MarginalOption opt,
                             std::size_t option2_cap = std::size_t(1) << 13);

// CMB-lensing configuration: d=2, xi = ik, eta_k = k, so that
// C^(1) = i k C^TT / (2pi).
PhaseModel preset_lensing(const GridSpec& g, const SpectralDensity& Ctt);

rvec lattice_eval(const SpectralDensity& s, const GridSpec& g);

}  // namespace nonstat

#endif
