#include "nonstat/grid.hpp"

#include <fftw3.h>

#include <cmath>
#include <cstring>
#include <map>
#include <mutex>

#include "nonstat/errors.hpp"

namespace nonstat {

std::size_t GridSpec::size() const {
  std::size_t s = 1;
  for (int a = 0; a < d; ++a) s *= static_cast<std::size_t>(n);
  return s;
}

double GridSpec::dk_d() const { return std::pow(dk, d); }
double GridSpec::dx_d() const { return std::pow(dx, d); }
double GridSpec::two_pi_half_d() const { return std::pow(2.0 * M_PI, 0.5 * d); }

std::array<int, 2> GridSpec::axis_index(std::size_t i) const {
  if (d == 1) return {static_cast<int>(i), 0};
  return {static_cast<int>(i / n), static_cast<int>(i % n)};
}

std::size_t GridSpec::linear_index(int j0, int j1) const {
  if (d == 1) return static_cast<std::size_t>(j0);
  return static_cast<std::size_t>(j0) * n + j1;
}

double GridSpec::freq_of_axis_index(int j) const {
  return (j < n / 2) ? j * dk : (j - n) * dk;
}

std::array<double, 2> GridSpec::freq(std::size_t i) const {
  auto ji = axis_index(i);
  return {freq_of_axis_index(ji[0]), d == 2 ? freq_of_axis_index(ji[1]) : 0.0};
}

double GridSpec::freq_norm(std::size_t i) const {
  auto k = freq(i);
  return std::sqrt(k[0] * k[0] + k[1] * k[1]);
}

int GridSpec::max_norm_radius(std::size_t i) const {
  auto ji = axis_index(i);
  int r = 0;
  for (int a = 0; a < d; ++a) {
    int j = ji[a];
    int s = (j < n / 2) ? j : n - j;  // |signed index|
    if (s > r) r = s;
  }
  return r;
}

std::size_t GridSpec::conj_index(std::size_t i) const {
  auto ji = axis_index(i);
  int c0 = (n - ji[0]) % n;
  int c1 = (n - ji[1]) % n;
  return linear_index(c0, c1);
}

bool GridSpec::self_conjugate(std::size_t i) const { return conj_index(i) == i; }

std::size_t GridSpec::add_wrap(std::size_t ik, std::size_t il) const {
  auto a = axis_index(ik);
  auto b = axis_index(il);
  int j0 = (a[0] + b[0]) % n;
  int j1 = (a[1] + b[1]) % n;
  return linear_index(j0, j1);
}

std::array<double, 2> GridSpec::coord(std::size_t i) const {
  auto ji = axis_index(i);
  return {ji[0] * dx, d == 2 ? ji[1] * dx : 0.0};
}

GridSpec make_grid(int d, double L, int n) {
  if (d != 1 && d != 2) throw ValidationError("make_grid: d must be 1 or 2");
  if (!(L > 0)) throw ValidationError("make_grid: L must be positive");
  if (n < 8) throw ValidationError("make_grid: n must be >= 8");
  if (n % 2 != 0) throw ValidationError("make_grid: n must be even");
  GridSpec g;
  g.d = d;
  g.L = L;
  g.n = n;
  g.dx = L / n;
  g.dk = 2.0 * M_PI / L;
  g.delta0 = 1.0 / g.dk_d();
  return g;
}

Field make_field(const GridSpec& g, Domain dom) {
  Field f;
  f.grid = g;
  f.domain = dom;
  f.v.assign(g.size(), cplx(0, 0));
  return f;
}

// ---------------------------------------------------------------------------
// FFTW wrapper with a cached plan per (d, n, sign). Plans are created with
// FFTW_ESTIMATE on internal aligned buffers; input is copied in and out so
// caller arrays need no special alignment. A mutex serializes access to the
// shared buffers.

namespace {

struct PlanEntry {
  fftw_plan plan = nullptr;
  fftw_complex* buf = nullptr;
  std::size_t size = 0;
};

std::map<std::tuple<int, int, int>, PlanEntry>& plan_cache() {
  static std::map<std::tuple<int, int, int>, PlanEntry> cache;
  return cache;
}

std::mutex& plan_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

void dft_raw(const GridSpec& g, const cvec& in, cvec& out, int sign) {
  const std::size_t m = g.size();
  if (in.size() != m) throw ValidationError("dft_raw: shape mismatch");
  out.resize(m);
  std::lock_guard<std::mutex> lock(plan_mutex());
  auto key = std::make_tuple(g.d, g.n, sign);
  auto& e = plan_cache()[key];
  if (!e.plan) {
    e.size = m;
    e.buf = fftw_alloc_complex(m);
    if (g.d == 1) {
      e.plan = fftw_plan_dft_1d(g.n, e.buf, e.buf, sign, FFTW_ESTIMATE);
    } else {
      e.plan = fftw_plan_dft_2d(g.n, g.n, e.buf, e.buf, sign, FFTW_ESTIMATE);
    }
  }
  // std::complex<double> is layout-compatible with fftw_complex
  std::memcpy(static_cast<void*>(e.buf), static_cast<const void*>(in.data()),
              m * sizeof(cplx));
  fftw_execute(e.plan);
  std::memcpy(static_cast<void*>(out.data()), static_cast<const void*>(e.buf),
              m * sizeof(cplx));
}

Field fft(const Field& f) {
  if (f.domain != Domain::pixel) throw ValidationError("fft: expects a pixel-domain field");
  Field out;
  out.grid = f.grid;
  out.domain = Domain::fourier;
  dft_raw(f.grid, f.v, out.v, FFTW_FORWARD);
  const double w = f.grid.dx_d() / f.grid.two_pi_half_d();
  for (auto& z : out.v) z *= w;
  return out;
}

Field ifft(const Field& f) {
  if (f.domain != Domain::fourier) throw ValidationError("ifft: expects a fourier-domain field");
  Field out;
  out.grid = f.grid;
  out.domain = Domain::pixel;
  dft_raw(f.grid, f.v, out.v, FFTW_BACKWARD);
  const double w = f.grid.dk_d() / f.grid.two_pi_half_d();
  for (auto& z : out.v) z *= w;
  return out;
}

cvec flip(const GridSpec& g, const cvec& in) {
  cvec out(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = in[g.conj_index(i)];
  return out;
}

Field hermitian_project(const Field& f) {
  Field out = f;
  const auto& g = f.grid;
  for (std::size_t i = 0; i < f.v.size(); ++i)
    out.v[i] = 0.5 * (f.v[i] + std::conj(f.v[g.conj_index(i)]));
  return out;
}

double GaussianRng::uniform() {
  // 53-bit mantissa, shifted into (0,1]
  return (static_cast<double>(eng_() >> 11) + 1.0) * 0x1p-53;
}

double GaussianRng::normal() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  double u2 = uniform();
  double r = std::sqrt(-2.0 * std::log(u1));
  double a = 2.0 * M_PI * u2;
  spare_ = r * std::sin(a);
  have_spare_ = true;
  return r * std::cos(a);
}

std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t index) {
  // splitmix64 over a combination that separates streams per realization
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Field white_noise_fourier(const GridSpec& g, GaussianRng& rng) {
  Field w = make_field(g, Domain::fourier);
  const double sd_self = std::sqrt(g.dk_d());
  const double sd_pair = std::sqrt(0.5 * g.dk_d());
  for (std::size_t i = 0; i < w.v.size(); ++i) {
    std::size_t c = g.conj_index(i);
    if (c == i) {
      w.v[i] = cplx(sd_self * rng.normal(), 0.0);
    } else if (i < c) {
      double a = rng.normal();
      double b = rng.normal();
      w.v[i] = cplx(sd_pair * a, sd_pair * b);
      w.v[c] = std::conj(w.v[i]);
    }
  }
  return w;
}

rvec lattice_derivative_signed(const GridSpec& g, const rvec& table, int axis) {
  const int n = g.n;
  const double dk = g.dk;
  rvec out(table.size(), 0.0);
  auto lat = [&](int s) { return ((s - n / 2) % n + n) % n; };  // signed slot -> lattice index
  if (g.d == 1) {
    for (int s = 0; s < n; ++s) {
      double der;
      if (s == 0)
        der = (table[lat(1)] - table[lat(0)]) / dk;
      else if (s == n - 1)
        der = (table[lat(n - 1)] - table[lat(n - 2)]) / dk;
      else
        der = (table[lat(s + 1)] - table[lat(s - 1)]) / (2.0 * dk);
      out[lat(s)] = der;
    }
    return out;
  }
  for (int srow = 0; srow < n; ++srow) {
    for (int scol = 0; scol < n; ++scol) {
      int s = (axis == 0) ? srow : scol;
      auto at = [&](int ss) {
        int i0 = (axis == 0) ? lat(ss) : lat(srow);
        int i1 = (axis == 0) ? lat(scol) : lat(ss);
        return table[g.linear_index(i0, i1)];
      };
      double der;
      if (s == 0)
        der = (at(1) - at(0)) / dk;
      else if (s == n - 1)
        der = (at(n - 1) - at(n - 2)) / dk;
      else
        der = (at(s + 1) - at(s - 1)) / (2.0 * dk);
      out[g.linear_index(lat(srow), lat(scol))] = der;
    }
  }
  return out;
}

double rms(const cvec& v) {
  double s = 0;
  for (const auto& z : v) s += std::norm(z);
  return std::sqrt(s / v.size());
}

double imag_rms(const cvec& v) {
  double s = 0;
  for (const auto& z : v) s += z.imag() * z.imag();
  return std::sqrt(s / v.size());
}

rvec real_part(const cvec& v) {
  rvec out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i].real();
  return out;
}

}  // namespace nonstat
