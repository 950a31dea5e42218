#include "doctest.h"

#include <cmath>

#include "nonstat/errors.hpp"
#include "nonstat/grid.hpp"

using namespace nonstat;

TEST_CASE("make_grid: paper configurations and validation") {
  GridSpec g1 = make_grid(1, 10.0, 10000);
  CHECK(g1.dk == doctest::Approx(2.0 * M_PI / 10.0).epsilon(1e-15));
  CHECK(g1.dx * g1.n == doctest::Approx(g1.L));
  CHECK(g1.dk * g1.dx == doctest::Approx(2.0 * M_PI / g1.n));

  GridSpec g2 = make_grid(2, 2.0 * M_PI, 400);
  CHECK(g2.dk == doctest::Approx(1.0));
  CHECK(g2.delta0 == doctest::Approx(1.0));

  GridSpec g3 = make_grid(1, 2.0 * M_PI, 8);
  // lattice in standard order: 0,1,2,3,-4,-3,-2,-1
  CHECK(g3.freq(0)[0] == doctest::Approx(0.0));
  CHECK(g3.freq(3)[0] == doctest::Approx(3.0));
  CHECK(g3.freq(4)[0] == doctest::Approx(-4.0));
  CHECK(g3.freq(7)[0] == doctest::Approx(-1.0));

  CHECK_THROWS_AS(make_grid(1, 10.0, 9), ValidationError);
  CHECK_THROWS_AS(make_grid(1, 10.0, 6), ValidationError);
  CHECK_THROWS_AS(make_grid(1, -1.0, 16), ValidationError);
  CHECK_THROWS_AS(make_grid(3, 1.0, 16), ValidationError);
}

TEST_CASE("fft of a constant carries the delta convention") {
  for (int d : {1, 2}) {
    GridSpec g = make_grid(d, 3.0, 16);
    Field f = make_field(g, Domain::pixel);
    const double c = 0.7;
    for (auto& v : f.v) v = c;
    Field fk = fft(f);
    double expected = c * g.two_pi_half_d() * g.delta0;
    CHECK(fk.v[0].real() == doctest::Approx(expected).epsilon(1e-12));
    double off = 0;
    for (std::size_t i = 1; i < fk.v.size(); ++i) off = std::max(off, std::abs(fk.v[i]));
    CHECK(off < 1e-10 * std::fabs(expected));
  }
}

TEST_CASE("fft of a single cosine splits its mass at +-k0") {
  GridSpec g = make_grid(1, 2.0 * M_PI, 32);
  Field f = make_field(g, Domain::pixel);
  const int j0 = 5;
  for (int m = 0; m < g.n; ++m) f.v[m] = std::cos(j0 * g.coord(m)[0]);
  Field fk = fft(f);
  double mass = 0.5 * g.two_pi_half_d() * g.delta0;
  CHECK(fk.v[j0].real() == doctest::Approx(mass).epsilon(1e-10));
  CHECK(fk.v[g.conj_index(j0)].real() == doctest::Approx(mass).epsilon(1e-10));
  double rest = 0;
  for (std::size_t i = 0; i < fk.v.size(); ++i)
    if (i != j0 && i != g.conj_index(j0)) rest = std::max(rest, std::abs(fk.v[i]));
  CHECK(rest < 1e-10 * mass);
}

TEST_CASE("fft/ifft round trip and Parseval") {
  for (int d : {1, 2}) {
    GridSpec g = make_grid(d, 5.0, d == 1 ? 128 : 24);
    GaussianRng rng(11);
    Field f = make_field(g, Domain::pixel);
    for (auto& v : f.v) v = rng.normal();
    Field fk = fft(f);
    Field back = ifft(fk);
    double err = 0, ref = 0;
    for (std::size_t i = 0; i < f.v.size(); ++i) {
      err += std::norm(back.v[i] - f.v[i]);
      ref += std::norm(f.v[i]);
    }
    CHECK(std::sqrt(err / ref) < 1e-12);

    double px = 0, sp = 0;
    for (std::size_t i = 0; i < f.v.size(); ++i) {
      px += std::norm(f.v[i]) * g.dx_d();
      sp += std::norm(fk.v[i]) * g.dk_d();
    }
    CHECK(px == doctest::Approx(sp).epsilon(1e-10));
  }
}

TEST_CASE("white noise: variance law, Hermitian symmetry, determinism") {
  GridSpec g = make_grid(1, 7.0, 256);
  GaussianRng rng(42);
  Field w = white_noise_fourier(g, rng);
  double mean_ratio = 0;
  for (std::size_t i = 0; i < w.v.size(); ++i) mean_ratio += std::norm(w.v[i]) / g.dk_d();
  mean_ratio /= w.v.size();
  CHECK(mean_ratio == doctest::Approx(1.0).epsilon(0.1));

  for (std::size_t i = 0; i < w.v.size(); ++i)
    CHECK(w.v[g.conj_index(i)] == std::conj(w.v[i]));

  GaussianRng rng2(42);
  Field w2 = white_noise_fourier(g, rng2);
  for (std::size_t i = 0; i < w.v.size(); ++i) CHECK(w.v[i] == w2.v[i]);

  Field pix = ifft(w);
  CHECK(imag_rms(pix.v) < 1e-10 * rms(pix.v));
}

TEST_CASE("white noise in d=2 keeps the variance law") {
  GridSpec g = make_grid(2, 4.0, 32);
  GaussianRng rng(5);
  Field w = white_noise_fourier(g, rng);
  double mean_ratio = 0;
  for (std::size_t i = 0; i < w.v.size(); ++i) mean_ratio += std::norm(w.v[i]) / g.dk_d();
  mean_ratio /= w.v.size();
  CHECK(mean_ratio == doctest::Approx(1.0).epsilon(0.1));
  Field pix = ifft(w);
  CHECK(imag_rms(pix.v) < 1e-10 * rms(pix.v));
}

TEST_CASE("hermitian projection") {
  GridSpec g = make_grid(1, 1.0, 16);
  GaussianRng rng(3);
  Field f = make_field(g, Domain::fourier);
  for (auto& v : f.v) v = cplx(rng.normal(), rng.normal());

  Field h = hermitian_project(f);
  for (std::size_t i = 0; i < h.v.size(); ++i)
    CHECK(std::abs(h.v[i] - std::conj(h.v[g.conj_index(i)])) < 1e-15);

  Field hh = hermitian_project(h);
  for (std::size_t i = 0; i < h.v.size(); ++i) CHECK(std::abs(hh.v[i] - h.v[i]) < 1e-15);

  // anti-Hermitian input projects to zero
  Field a = make_field(g, Domain::fourier);
  for (std::size_t i = 0; i < a.v.size(); ++i) {
    std::size_t c = g.conj_index(i);
    if (i < c) {
      a.v[i] = cplx(rng.normal(), rng.normal());
      a.v[c] = -std::conj(a.v[i]);
    } else if (i == c) {
      a.v[i] = cplx(0.0, rng.normal());
    }
  }
  Field z = hermitian_project(a);
  for (const auto& v : z.v) CHECK(std::abs(v) < 1e-15);
}

TEST_CASE("signed-order lattice derivative is exact on linear tables") {
  GridSpec g = make_grid(1, 4.0, 32);
  rvec table(g.size());
  for (std::size_t i = 0; i < table.size(); ++i) table[i] = 3.0 * g.freq(i)[0];
  rvec der = lattice_derivative_signed(g, table, 0);
  for (double v : der) CHECK(v == doctest::Approx(3.0).epsilon(1e-12));

  GridSpec g2 = make_grid(2, 4.0, 16);
  rvec t2(g2.size());
  for (std::size_t i = 0; i < t2.size(); ++i) {
    auto k = g2.freq(i);
    t2[i] = 2.0 * k[0] - 5.0 * k[1];
  }
  rvec d0 = lattice_derivative_signed(g2, t2, 0);
  rvec d1 = lattice_derivative_signed(g2, t2, 1);
  for (double v : d0) CHECK(v == doctest::Approx(2.0).epsilon(1e-12));
  for (double v : d1) CHECK(v == doctest::Approx(-5.0).epsilon(1e-12));
}

TEST_CASE("substream seeds decorrelate and are deterministic") {
  CHECK(substream_seed(1, 0) == substream_seed(1, 0));
  CHECK(substream_seed(1, 0) != substream_seed(1, 1));
  CHECK(substream_seed(1, 0) != substream_seed(2, 0));
}
