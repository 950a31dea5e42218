#ifndef NONSTAT_GRID_HPP
#define NONSTAT_GRID_HPP

#include <array>
#include <complex>
#include <cstdint>
#include <random>
#include <vector>

namespace nonstat {

using cplx = std::complex<double>;
using cvec = std::vector<cplx>;
using rvec = std::vector<double>;

// Periodic grid on [0,L)^d with the continuum-normalized Fourier conventions
//   f_k = sum_x e^{-i x.k} f(x) dx^d / (2pi)^{d/2}
//   f(x) = sum_k e^{+i x.k} f_k dk^d / (2pi)^{d/2}
// so that dk = 2pi/L, dx = L/n and the lattice delta at zero is 1/dk^d.
// Frequencies are stored in standard FFT wraparound order per axis:
// index j maps to frequency j*dk for j < n/2 and (j-n)*dk otherwise.
struct GridSpec {
  int d = 1;       // 1 or 2
  double L = 0;    // physical side length per axis
  int n = 0;       // grid points per axis (even, >= 8)
  double dx = 0;   // L/n
  double dk = 0;   // 2pi/L
  double delta0 = 0;  // 1/dk^d

  std::size_t size() const;               // n^d
  double dk_d() const;                    // dk^d
  double dx_d() const;                    // dx^d
  double two_pi_half_d() const;           // (2pi)^{d/2}

  // per-axis index of a linear (row-major) index
  std::array<int, 2> axis_index(std::size_t i) const;
  std::size_t linear_index(int j0, int j1 = 0) const;

  double freq_of_axis_index(int j) const;       // signed frequency
  std::array<double, 2> freq(std::size_t i) const;
  double freq_norm(std::size_t i) const;        // |k| Euclidean
  int max_norm_radius(std::size_t i) const;     // per-axis max norm, in index units

  std::size_t conj_index(std::size_t i) const;  // index of -k on the lattice
  bool self_conjugate(std::size_t i) const;     // k == -k (zero/Nyquist combos)

  // linear index of k + l with periodic wraparound
  std::size_t add_wrap(std::size_t ik, std::size_t il) const;

  // pixel coordinate of a linear index (first point at 0)
  std::array<double, 2> coord(std::size_t i) const;

  bool operator==(const GridSpec&) const = default;
};

GridSpec make_grid(int d, double L, int n);

enum class Domain { pixel, fourier };

struct Field {
  GridSpec grid;
  Domain domain = Domain::pixel;
  cvec v;
};

Field make_field(const GridSpec& g, Domain dom);

// Forward / inverse transforms under the conventions above.
Field fft(const Field& pixel_field);
Field ifft(const Field& fourier_field);

// Raw unnormalized DFT on a complex array (sign = -1 forward, +1 backward).
void dft_raw(const GridSpec& g, const cvec& in, cvec& out, int sign);

// out[i] = in[-i mod lattice]  (no conjugation)
cvec flip(const GridSpec& g, const cvec& in);

// (f_k + conj(f_{-k})) / 2; idempotent
Field hermitian_project(const Field& f);

// Deterministic Gaussian stream: Box-Muller on top of mt19937_64 so the
// draw sequence is stable across platforms and library versions.
class GaussianRng {
 public:
  explicit GaussianRng(std::uint64_t seed) : eng_(seed) {}
  double normal();
  double uniform();  // in (0,1]

 private:
  std::mt19937_64 eng_;
  bool have_spare_ = false;
  double spare_ = 0;
};

// RNG stream for realization `index` under a master seed; streams for
// different indices are decorrelated via splitmix64 mixing.
std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t index);

// Hermitian complex Gaussian array with E|W_k|^2 = dk^d per lattice point;
// self-conjugate frequencies are drawn real with the same variance.
Field white_noise_fourier(const GridSpec& g, GaussianRng& rng);

// d/dk_axis of a lattice table: central differences taken in signed-frequency
// order (one-sided at the two ends of the signed range, no wraparound).
rvec lattice_derivative_signed(const GridSpec& g, const rvec& table, int axis);

// diagnostics
double rms(const cvec& v);
double imag_rms(const cvec& v);
rvec real_part(const cvec& v);

}  // namespace nonstat

#endif
