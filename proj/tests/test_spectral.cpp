#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "fkdv/grid.hpp"
#include "fkdv/profile_io.hpp"
#include "fkdv/spectral.hpp"
#include "support/oracles.hpp"

using namespace fkdv;

namespace {
void check_close(double a, double b, double tol, double scale = 1.0) {
  CHECK(std::abs(a - b) <= tol * std::max(scale, 1e-300));
}
}  // namespace

TEST_CASE("grid validation") {
  CHECK_THROWS_AS(Grid(-1.0, 64), std::invalid_argument);
  CHECK_THROWS_AS(Grid(10.0, 15), std::invalid_argument);
  CHECK_THROWS_AS(Grid(10.0, 8), std::invalid_argument);
  Grid g(30.0, 128);
  CHECK(g.spacing() * g.n == doctest::Approx(2 * g.half_length).epsilon(1e-15));
  CHECK(g.x(g.n / 2) == 0.0);
  CHECK(g.wavenumber(1) == doctest::Approx(kPi / 30.0));
}

TEST_CASE("sobolev_inner matches the direct full-spectrum mode sum") {
  Grid g(30.0, 128);
  auto u = oracle::random_smooth(g, 101);
  auto v = oracle::random_smooth(g, 202);
  for (double s : {0.0, 0.5, 1.0, 1.7}) {
    for (double w : {0.0, 1.0, 2.3}) {
      double got = sobolev_inner(u, v, {s, w});
      double want = oracle::sobolev_inner(u, v, s, w);
      check_close(got, want, 1e-12, std::abs(want));
    }
  }
}

TEST_CASE("Parseval: zero-order pairing equals the physical quadrature") {
  Grid g(30.0, 128);
  auto u = oracle::random_smooth(g, 7);
  auto v = oracle::random_smooth(g, 8);
  double phys = 0.0;
  for (int i = 0; i < g.n; ++i) phys += u.values[i] * v.values[i];
  phys *= g.spacing();
  check_close(sobolev_inner(u, v, {0.0, 0.0}), phys, 1e-12, std::abs(phys));
  check_close(l2_inner(u, v), phys, 1e-15, std::abs(phys));
}

TEST_CASE("fractional derivative composes and is the identity at s = 0") {
  Grid g(30.0, 128);
  // Band-limit well below Nyquist so products of symbols stay resolved.
  auto v = oracle::random_smooth(g, 33, 20);
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> uni(0.0, 2.0);
  for (int trial = 0; trial < 4; ++trial) {
    double s1 = uni(rng), s2 = uni(rng);
    auto a = fractional_derivative(fractional_derivative(v, s1), s2);
    auto b = fractional_derivative(v, s1 + s2);
    double scale = max_abs(b);
    for (int i = 0; i < g.n; ++i)
      check_close(a.values[i], b.values[i], 1e-10, scale);
  }
  auto id = fractional_derivative(v, 0.0);
  for (int i = 0; i < g.n; ++i) CHECK(id.values[i] == v.values[i]);
}

TEST_CASE("fractional derivative preserves evenness") {
  Grid g(30.0, 128);
  auto v = oracle::random_smooth(g, 44, 24, /*even=*/true);
  REQUIRE(max_asymmetry(v) <= 1e-13 * max_abs(v));
  for (double s : {0.7, 1.0, 1.5, 2.0}) {
    auto dv = fractional_derivative(v, s);
    CHECK(max_asymmetry(dv) <= 1e-12 * max_abs(dv));
  }
}

TEST_CASE("second-order case matches the analytic Gaussian derivative") {
  Grid g(30.0, 256);
  Profile v(g), want(g);
  for (int i = 0; i < g.n; ++i) {
    double x = g.x(i);
    v.values[i] = std::exp(-0.5 * x * x);
    // D^2 = -d2/dx2: -(x^2 - 1) exp(-x^2/2)
    want.values[i] = -(x * x - 1.0) * std::exp(-0.5 * x * x);
  }
  auto got = fractional_derivative(v, 2.0);
  for (int i = 0; i < g.n; ++i)
    check_close(got.values[i], want.values[i], 1e-9);
}

TEST_CASE("half-derivative of the algebraic soliton closes its equation") {
  // Q = 2/(1+x^2) satisfies D^1 Q = Q^2 - Q.
  Grid g(200.0, 4096);
  Profile q(g);
  for (int i = 0; i < g.n; ++i) {
    double x = g.x(i);
    q.values[i] = 2.0 / (1.0 + x * x);
  }
  auto dq = fractional_derivative(q, 1.0);
  double worst = 0.0;
  for (int i = 0; i < g.n; ++i) {
    double rhs = q.values[i] * q.values[i] - q.values[i];
    worst = std::max(worst, std::abs(dq.values[i] - rhs));
  }
  CHECK(worst <= 1e-3);
}

TEST_CASE("first derivative: exact on a cosine, zero on the Nyquist mode") {
  Grid g(30.0, 128);
  Profile v(g), nyq(g);
  double k3 = g.wavenumber(3);
  for (int i = 0; i < g.n; ++i) {
    v.values[i] = std::cos(k3 * g.x(i));
    nyq.values[i] = (i % 2 == 0) ? 1.0 : -1.0;  // pure Nyquist
  }
  auto dv = derivative(v);
  for (int i = 0; i < g.n; ++i)
    check_close(dv.values[i], -k3 * std::sin(k3 * g.x(i)), 1e-12, k3);
  auto dn = derivative(nyq);
  CHECK(max_abs(dn) <= 1e-12);
}

TEST_CASE("power integrals agree with analytic Gaussian moments") {
  Grid g(30.0, 256);
  const double A = 1.3;
  Profile v(g);
  for (int i = 0; i < g.n; ++i)
    v.values[i] = A * std::exp(-0.5 * g.x(i) * g.x(i));
  // int v^m = A^m sqrt(2 pi / m)
  for (int m : {1, 2, 3, 5}) {
    double want = std::pow(A, m) * std::sqrt(2.0 * kPi / m);
    check_close(lp_integral(v, m), want, 1e-12, want);
  }
  // signed integral: odd power of a negative profile is negative
  Profile neg = -1.0 * v;
  CHECK(lp_integral(neg, 3) < 0.0);
}

TEST_CASE("shift is exact on band-limited data and matches index rotation") {
  Grid g(30.0, 128);
  auto v = oracle::random_smooth(g, 55, 20);
  const double y = 0.37;
  auto sv = shift(v, y);
  auto modes = to_modes(v);
  for (int i = 0; i < g.n; i += 7)
    check_close(sv.values[i], eval_trig(g, modes, g.x(i) - y), 1e-11,
                max_abs(v));
  // whole-cell shift == circular rotation
  int cells = 9;
  auto sc = shift(v, cells * g.spacing());
  for (int i = 0; i < g.n; ++i) {
    int j = (i - cells + g.n) % g.n;
    check_close(sc.values[i], v.values[j], 1e-12, max_abs(v));
  }
}

TEST_CASE("trig interpolant reproduces grid samples") {
  Grid g(30.0, 128);
  auto v = oracle::random_smooth(g, 66);
  auto modes = to_modes(v);
  for (int i = 0; i < g.n; i += 11)
    check_close(eval_trig(g, modes, g.x(i)), v.values[i], 1e-12, max_abs(v));
}

TEST_CASE("resample round-trips and preserves band-limited content") {
  Grid g(30.0, 128);
  auto v = oracle::random_smooth(g, 77, 30);
  auto up = resample(v, 192);
  auto back = resample(up, 128);
  for (int i = 0; i < g.n; ++i)
    check_close(back.values[i], v.values[i], 1e-12, max_abs(v));
  // padded samples interleave the interpolant
  auto modes = to_modes(v);
  for (int i = 0; i < up.grid.n; i += 13)
    check_close(up.values[i], eval_trig(g, modes, up.grid.x(i)), 1e-11,
                max_abs(v));
}

TEST_CASE("profile files round-trip exactly and reject malformed input") {
  namespace fs = std::filesystem;
  Grid g(30.0, 64);
  auto v = oracle::random_smooth(g, 88);
  v.values[5] = 1.0 / 3.0;  // exercise full 17-digit round-trip
  fs::path dir = fs::temp_directory_path() / "fkdv_io_test";
  fs::create_directories(dir);
  fs::path file = dir / "profile.dat";
  save_profile(file, v);
  auto w = load_profile(file);
  REQUIRE(w.grid == g);
  for (int i = 0; i < g.n; ++i) CHECK(w.values[i] == v.values[i]);

  // header carries the grid
  std::ifstream in(file);
  std::string header;
  std::getline(in, header);
  CHECK(header.find("\"L\"") != std::string::npos);
  CHECK(header.find("\"N\"") != std::string::npos);

  fs::path bad = dir / "bad.dat";
  std::ofstream(bad) << "0.0 1.0\n0.5 2.0\n";
  CHECK_THROWS(load_profile(bad));
  fs::path trunc = dir / "trunc.dat";
  std::ofstream(trunc) << "# {\"L\":30.0,\"N\":64}\n0.0 1.0\n";
  CHECK_THROWS(load_profile(trunc));
}

TEST_CASE("even symmetrization fixes asymmetry and reports it") {
  Grid g(30.0, 128);
  auto v = oracle::random_smooth(g, 99);
  double asym = max_asymmetry(v);
  CHECK(asym > 0.0);
  even_symmetrize(v);
  CHECK(max_asymmetry(v) <= 1e-15);
}

TEST_CASE("fft-friendly size search") {
  CHECK(next_fft_size(128) == 128);
  CHECK(next_fft_size(129) == 144);  // 2^4 * 3^2
  CHECK(next_fft_size(769) == 800);
  CHECK(next_fft_size(7) == 8);
}
