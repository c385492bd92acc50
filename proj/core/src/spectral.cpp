#include "fkdv/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>

namespace fkdv {
namespace {

// FFTW plan creation/destruction is not thread-safe; execution on a
// plan's own buffers is.  Workspaces are cached per thread and per size,
// and all planning goes through one global mutex.  FFTW_ESTIMATE keeps
// the chosen algorithm deterministic run-to-run.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct Workspace {
  int n = 0;
  double* real_buf = nullptr;
  fftw_complex* cplx_buf = nullptr;
  fftw_plan fwd = nullptr;
  fftw_plan bwd = nullptr;

  explicit Workspace(int n_) : n(n_) {
    real_buf = fftw_alloc_real(static_cast<size_t>(n));
    cplx_buf = fftw_alloc_complex(static_cast<size_t>(n / 2 + 1));
    if (!real_buf || !cplx_buf) throw std::bad_alloc();
    std::lock_guard<std::mutex> lock(planner_mutex());
    fwd = fftw_plan_dft_r2c_1d(n, real_buf, cplx_buf, FFTW_ESTIMATE);
    bwd = fftw_plan_dft_c2r_1d(n, cplx_buf, real_buf, FFTW_ESTIMATE);
    if (!fwd || !bwd) throw std::runtime_error("FFTW planning failed");
  }
  ~Workspace() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    if (fwd) fftw_destroy_plan(fwd);
    if (bwd) fftw_destroy_plan(bwd);
    fftw_free(real_buf);
    fftw_free(cplx_buf);
  }
  Workspace(const Workspace&) = delete;
  Workspace& operator=(const Workspace&) = delete;
};

Workspace& workspace_for(int n) {
  thread_local std::map<int, std::unique_ptr<Workspace>> cache;
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<Workspace>(n);
  return *slot;
}

double ipow(double base, int m) {
  double r = 1.0;
  for (int i = 0; i < m; ++i) r *= base;
  return r;
}

void check_same_grid(const Profile& u, const Profile& v, const char* op) {
  if (!(u.grid == v.grid))
    throw std::invalid_argument(std::string(op) + ": grids differ");
}

}  // namespace

ModeVector to_modes(const Profile& v) {
  auto& ws = workspace_for(v.grid.n);
  std::copy(v.values.begin(), v.values.end(), ws.real_buf);
  fftw_execute(ws.fwd);
  ModeVector out(static_cast<size_t>(v.grid.n / 2 + 1));
  for (size_t j = 0; j < out.size(); ++j)
    out[j] = {ws.cplx_buf[j][0], ws.cplx_buf[j][1]};
  return out;
}

Profile from_modes(const Grid& grid, const ModeVector& modes) {
  if (static_cast<int>(modes.size()) != grid.mode_count())
    throw std::invalid_argument("from_modes: mode count does not match grid");
  auto& ws = workspace_for(grid.n);
  for (size_t j = 0; j < modes.size(); ++j) {
    ws.cplx_buf[j][0] = modes[j].real();
    ws.cplx_buf[j][1] = modes[j].imag();
  }
  fftw_execute(ws.bwd);
  Profile out(grid);
  const double inv_n = 1.0 / grid.n;
  for (int i = 0; i < grid.n; ++i) out.values[i] = ws.real_buf[i] * inv_n;
  return out;
}

Profile apply_symbol(const Profile& v,
                     const std::function<double(double)>& symbol) {
  auto modes = to_modes(v);
  const int half = v.grid.n / 2;
  for (int j = 0; j <= half; ++j) modes[j] *= symbol(v.grid.wavenumber(j));
  return from_modes(v.grid, modes);
}

Profile fractional_derivative(const Profile& v, double s) {
  if (!(s >= 0.0 && s <= 4.0))
    throw std::invalid_argument("fractional_derivative: s must lie in [0, 4]");
  if (s == 0.0) return v;  // identity, exactly
  return apply_symbol(v, [s](double k) { return std::pow(std::abs(k), s); });
}

Profile derivative(const Profile& v, int order) {
  if (order < 1 || order > 4)
    throw std::invalid_argument("derivative: order must lie in [1, 4]");
  auto modes = to_modes(v);
  const int half = v.grid.n / 2;
  for (int j = 0; j <= half; ++j) {
    std::complex<double> ik(0.0, v.grid.wavenumber(j));
    std::complex<double> m = 1.0;
    for (int o = 0; o < order; ++o) m *= ik;
    modes[j] *= m;
  }
  if (order % 2 == 1) modes[half] = 0.0;  // odd symbol: drop Nyquist
  return from_modes(v.grid, modes);
}

Profile invert_symbol(const Profile& v, double sigma, double shift) {
  if (!(shift > 0.0))
    throw std::invalid_argument("invert_symbol: shift must be positive");
  return apply_symbol(v, [sigma, shift](double k) {
    return 1.0 / (std::pow(std::abs(k), sigma) + shift);
  });
}

double sobolev_inner(const Profile& u, const Profile& v, SobolevIndex idx) {
  check_same_grid(u, v, "sobolev_inner");
  const auto uh = to_modes(u);
  const auto vh = to_modes(v);
  const Grid& g = u.grid;
  const int half = g.n / 2;
  const double two_s = 2.0 * idx.order;
  // D^0 is the identity, so |k|^0 counts as 1 at k = 0 as well.
  auto mult = [&](double k) {
    double d = (idx.order == 0.0) ? 1.0 : std::pow(std::abs(k), two_s);
    return d + idx.weight;
  };
  // Folded half-spectrum sum; j = 0 and Nyquist are unpaired.
  double acc = mult(0.0) * (uh[0].real() * vh[0].real());
  for (int j = 1; j < half; ++j)
    acc += 2.0 * mult(g.wavenumber(j)) * (uh[j] * std::conj(vh[j])).real();
  acc += mult(g.wavenumber(half)) * (uh[half].real() * vh[half].real());
  return acc * g.spacing() / g.n;
}

double l2_inner(const Profile& u, const Profile& v) {
  check_same_grid(u, v, "l2_inner");
  double acc = 0.0;
  for (int i = 0; i < u.grid.n; ++i) acc += u.values[i] * v.values[i];
  return acc * u.grid.spacing();
}

double lp_integral(const Profile& v, int m) {
  if (m < 1 || m > 16)
    throw std::invalid_argument("lp_integral: power must lie in [1, 16]");
  double acc = 0.0;
  for (double x : v.values) acc += ipow(x, m);
  return acc * v.grid.spacing();
}

Profile shift(const Profile& v, double y) {
  auto modes = to_modes(v);
  const int half = v.grid.n / 2;
  for (int j = 0; j < half; ++j) {
    double ky = v.grid.wavenumber(j) * y;
    modes[j] *= std::complex<double>(std::cos(ky), -std::sin(ky));
  }
  // Nyquist mode splits symmetrically between +-k_{n/2}: real cosine factor.
  modes[half] *= std::cos(v.grid.wavenumber(half) * y);
  return from_modes(v.grid, modes);
}

double eval_trig(const Grid& grid, const ModeVector& modes, double y) {
  const int half = grid.n / 2;
  // Raw DFT phases reference index space: value(x) uses exp(i k (x + L)).
  const double t = y + grid.half_length;
  double acc = modes[0].real();
  for (int j = 1; j < half; ++j) {
    double kt = grid.wavenumber(j) * t;
    acc += 2.0 * (modes[j].real() * std::cos(kt) - modes[j].imag() * std::sin(kt));
  }
  acc += modes[half].real() * std::cos(grid.wavenumber(half) * t);
  return acc / grid.n;
}

double eval_trig(const Profile& v, double y) {
  return eval_trig(v.grid, to_modes(v), y);
}

Profile resample(const Profile& v, int n_new) {
  const Grid g_new(v.grid.half_length, n_new);
  if (n_new == v.grid.n) return v;
  const auto modes = to_modes(v);
  const int half_old = v.grid.n / 2;
  const int half_new = n_new / 2;
  ModeVector out(static_cast<size_t>(half_new + 1), 0.0);
  const double scale = static_cast<double>(n_new) / v.grid.n;
  if (n_new > v.grid.n) {
    for (int j = 0; j < half_old; ++j) out[j] = scale * modes[j];
    // Old Nyquist energy splits over +-k_{n/2}; only + is stored here.
    out[half_old] = 0.5 * scale * modes[half_old];
  } else {
    for (int j = 0; j < half_new; ++j) out[j] = scale * modes[j];
    // New Nyquist collects both old +-k_{n_new/2} modes.
    out[half_new] = scale * 2.0 * modes[half_new].real();
  }
  return from_modes(g_new, out);
}

void even_symmetrize(Profile& v) {
  const int n = v.grid.n;
  for (int i = 1; i <= n / 2; ++i) {
    int r = reflect_index(i, n);
    if (r == i) continue;
    double m = 0.5 * (v.values[i] + v.values[r]);
    v.values[i] = m;
    v.values[r] = m;
  }
}

double max_asymmetry(const Profile& v) {
  const int n = v.grid.n;
  double worst = 0.0;
  for (int i = 1; i <= n / 2; ++i)
    worst = std::max(worst,
                     std::abs(v.values[i] - v.values[reflect_index(i, n)]));
  return worst;
}

double max_abs(const Profile& v) {
  double m = 0.0;
  for (double x : v.values) m = std::max(m, std::abs(x));
  return m;
}

bool all_finite(const Profile& v) {
  return std::all_of(v.values.begin(), v.values.end(),
                     [](double x) { return std::isfinite(x); });
}

Profile pointwise_pow(const Profile& v, int m) {
  Profile out(v.grid);
  for (int i = 0; i < v.grid.n; ++i) out.values[i] = ipow(v.values[i], m);
  return out;
}

Profile operator+(const Profile& a, const Profile& b) {
  check_same_grid(a, b, "operator+");
  Profile out(a.grid);
  for (int i = 0; i < a.grid.n; ++i) out.values[i] = a.values[i] + b.values[i];
  return out;
}

Profile operator-(const Profile& a, const Profile& b) {
  check_same_grid(a, b, "operator-");
  Profile out(a.grid);
  for (int i = 0; i < a.grid.n; ++i) out.values[i] = a.values[i] - b.values[i];
  return out;
}

Profile operator*(double s, const Profile& a) {
  Profile out(a.grid);
  for (int i = 0; i < a.grid.n; ++i) out.values[i] = s * a.values[i];
  return out;
}

int next_fft_size(int m) {
  auto friendly = [](int v) {
    for (int f : {2, 3, 5})
      while (v % f == 0) v /= f;
    return v == 1;
  };
  int v = m + (m % 2);
  while (!(v % 2 == 0 && friendly(v))) v += 2;
  return v;
}

}  // namespace fkdv
