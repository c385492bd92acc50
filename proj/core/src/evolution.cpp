#include "fkdv/evolution.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "fkdv/spectral.hpp"

namespace fkdv {

namespace {

// Hermitian-weighted spectral sum: (h/n) * sum over the full spectrum,
// folded onto half-spectrum storage (interior modes count twice).
double spectral_sum(const Grid& grid, const ModeVector& a, const ModeVector& b,
                    const std::vector<double>& w) {
  const int half = grid.n / 2;
  double s = w[0] * (a[0].real() * b[0].real() + a[0].imag() * b[0].imag());
  for (int j = 1; j < half; ++j)
    s += 2.0 * w[j] *
         (a[j].real() * b[j].real() + a[j].imag() * b[j].imag());
  s += w[half] *
       (a[half].real() * b[half].real() + a[half].imag() * b[half].imag());
  return s * grid.spacing() / grid.n;
}

}  // namespace

Integrator::Integrator(const Grid& grid, double sigma, Nonlinearity nl)
    : grid_(grid), sigma_(sigma), nl_(std::move(nl)) {
  if (!(sigma_ >= 1.0 && sigma_ <= 2.0))
    throw std::invalid_argument("Integrator: sigma must lie in [1, 2]");
  // Zero-padding removes aliasing in products of up to max_power factors
  // when the working transform holds at least (P + 1) / 2 times the modes.
  const int p = std::max(1, nl_.max_power());
  n_pad_ = next_fft_size(((p + 1) * grid_.n + 1) / 2);
  const int half = grid_.n / 2;
  phase_k_.resize(static_cast<size_t>(half) + 1);
  for (int j = 0; j <= half; ++j) {
    const double k = grid_.wavenumber(j);
    phase_k_[j] = k * std::pow(std::abs(k), sigma_);
  }
  phase_k_[half] = 0.0;  // unpaired mode: no well-defined odd multiplier
}

EvolutionState Integrator::make_state(const Profile& u0, double t0) const {
  if (u0.grid.n != grid_.n || u0.grid.half_length != grid_.half_length)
    throw std::invalid_argument("Integrator: profile grid mismatch");
  return EvolutionState{grid_, to_modes(u0), t0};
}

Profile Integrator::to_profile(const EvolutionState& s) const {
  return from_modes(grid_, s.modes);
}

double Integrator::default_dt() const {
  return 0.2 * std::pow(grid_.spacing(), sigma_) / std::max(1.0, sigma_);
}

double Integrator::momentum(const EvolutionState& s) const {
  return grid_.spacing() * s.modes[0].real();
}

ModeVector Integrator::nonlinear_rhs(const ModeVector& u) const {
  const int n = grid_.n;
  const int half = n / 2;
  const Grid fine(grid_.half_length, n_pad_);

  // Embed into the padded spectrum.  Unnormalised coefficients scale with
  // the transform length; the coarse unpaired mode splits over a conjugate
  // pair on the fine grid, hence the extra 1/2.
  ModeVector up(static_cast<size_t>(n_pad_ / 2) + 1, {0.0, 0.0});
  const double up_scale = static_cast<double>(n_pad_) / n;
  for (int j = 0; j < half; ++j) up[j] = up_scale * u[j];
  up[half] = 0.5 * up_scale * u[half];

  Profile work = from_modes(fine, up);
  for (double& s : work.values) s = nl_.f(s);
  ModeVector fm = to_modes(work);

  ModeVector out(static_cast<size_t>(half) + 1, {0.0, 0.0});
  const double down = static_cast<double>(n) / n_pad_;
  for (int j = 0; j < half; ++j) {
    const double k = grid_.wavenumber(j);
    const std::complex<double> fj = down * fm[j];
    out[j] = std::complex<double>(k * fj.imag(), -k * fj.real());  // -ik f^
  }
  out[half] = 0.0;
  return out;
}

void Integrator::ensure_phases(double dt) const {
  if (dt == cached_dt_) return;
  const size_t m = phase_k_.size();
  e_half_.resize(m);
  e_full_.resize(m);
  for (size_t j = 0; j < m; ++j) {
    const double th = 0.5 * dt * phase_k_[j];
    e_half_[j] = {std::cos(th), std::sin(th)};
    e_full_[j] = e_half_[j] * e_half_[j];
  }
  cached_dt_ = dt;
}

void Integrator::step(EvolutionState& s, double dt) const {
  ensure_phases(dt);
  const size_t m = s.modes.size();
  ModeVector& v = s.modes;

  const ModeVector a = nonlinear_rhs(v);

  ModeVector tmp(m);
  for (size_t j = 0; j < m; ++j)
    tmp[j] = e_half_[j] * (v[j] + 0.5 * dt * a[j]);
  const ModeVector b = nonlinear_rhs(tmp);

  for (size_t j = 0; j < m; ++j)
    tmp[j] = e_half_[j] * v[j] + 0.5 * dt * b[j];
  const ModeVector c = nonlinear_rhs(tmp);

  for (size_t j = 0; j < m; ++j)
    tmp[j] = e_full_[j] * v[j] + dt * e_half_[j] * c[j];
  const ModeVector d = nonlinear_rhs(tmp);

  for (size_t j = 0; j < m; ++j)
    v[j] = e_full_[j] * v[j] +
           dt / 6.0 *
               (e_full_[j] * a[j] + 2.0 * e_half_[j] * (b[j] + c[j]) + d[j]);
  s.t += dt;
}

OrbitalDistanceResult orbital_distance(const Profile& u, const Profile& phi,
                                       double sigma) {
  const Grid& grid = u.grid;
  if (grid.n != phi.grid.n || grid.half_length != phi.grid.half_length)
    throw std::invalid_argument("orbital_distance: grid mismatch");
  const int half = grid.n / 2;

  const ModeVector um = to_modes(u);
  const ModeVector pm = to_modes(phi);
  std::vector<double> w(static_cast<size_t>(half) + 1);
  for (int j = 0; j <= half; ++j)
    w[j] = std::pow(std::abs(grid.wavenumber(j)), sigma) + 1.0;

  const double nu = spectral_sum(grid, um, um, w);
  const double np = spectral_sum(grid, pm, pm, w);

  // Correlation C(y) = <u, phi(. - y)>_w is the real trig polynomial with
  // half-spectrum coefficients w_j u_j conj(p_j); one inverse transform
  // evaluates it at every grid shift at once.
  ModeVector cm(static_cast<size_t>(half) + 1);
  for (int j = 0; j <= half; ++j) cm[j] = w[j] * um[j] * std::conj(pm[j]);
  const Profile corr = from_modes(grid, cm);

  int best = 0;
  for (int i = 1; i < grid.n; ++i)
    if (corr.values[i] > corr.values[best]) best = i;

  // Refine on the interpolant: golden-section inside the bracketing cell.
  const double h = grid.spacing();
  const double scale = h;  // (h/n) pairing weight over the 1/n in from_modes
  auto corr_at = [&](double y) { return eval_trig(grid, cm, y); };
  double lo = grid.x(best) - h, hi = grid.x(best) + h;
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double y1 = hi - gr * (hi - lo), y2 = lo + gr * (hi - lo);
  double f1 = corr_at(y1), f2 = corr_at(y2);
  for (int it = 0; it < 80; ++it) {
    if (f1 > f2) {
      hi = y2;
      y2 = y1;
      f2 = f1;
      y1 = hi - gr * (hi - lo);
      f1 = corr_at(y1);
    } else {
      lo = y1;
      y1 = y2;
      f1 = f2;
      y2 = lo + gr * (hi - lo);
      f2 = corr_at(y2);
    }
  }
  // Index i of the correlation array is the translate y = i h: the mode
  // phases are referred to the transform origin at index 0, which sits at
  // x = -L, so the array coordinate leads the translate by L.
  double y_star = (f1 > f2 ? y1 : y2) + grid.half_length;
  const double c_max = scale * std::max(f1, f2);

  const double period = 2.0 * grid.half_length;
  y_star -= period * std::floor((y_star + grid.half_length) / period);

  OrbitalDistanceResult out;
  const double d2 = nu + np - 2.0 * c_max;
  out.distance = d2 > 0.0 ? std::sqrt(d2) : 0.0;
  out.y_star = y_star;
  return out;
}

PerturbationKind perturbation_from_string(const std::string& name) {
  if (name == "bump") return PerturbationKind::Bump;
  if (name == "rescale") return PerturbationKind::Rescale;
  if (name == "noise") return PerturbationKind::Noise;
  throw std::invalid_argument("unknown perturbation kind: " + name);
}

const char* to_string(PerturbationKind k) {
  switch (k) {
    case PerturbationKind::Bump:
      return "bump";
    case PerturbationKind::Rescale:
      return "rescale";
    case PerturbationKind::Noise:
      return "noise";
  }
  return "?";
}

Profile perturb(const Profile& phi, double sigma, const PerturbationSpec& s) {
  const Grid& grid = phi.grid;
  const SobolevIndex idx(0.5 * sigma, 1.0);
  const double ref = sobolev_norm(phi, idx);

  if (s.kind == PerturbationKind::Rescale) {
    Profile out = phi;
    for (double& v : out.values) v *= 1.0 + s.delta;
    return out;
  }

  Profile shape{grid, std::vector<double>(static_cast<size_t>(grid.n), 0.0)};
  if (s.kind == PerturbationKind::Bump) {
    for (int i = 0; i < grid.n; ++i) {
      const double x = grid.x(i);
      shape.values[i] = std::exp(-x * x);
    }
  } else {  // Noise: even band-limited cosine series, reproducible by seed
    std::mt19937 rng(s.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const int bands = std::min(24, grid.n / 2 - 1);
    std::vector<double> xi(static_cast<size_t>(bands) + 1, 0.0);
    for (int m = 1; m <= bands; ++m) xi[m] = gauss(rng);
    for (int i = 0; i < grid.n; ++i) {
      const double x = grid.x(i);
      double v = 0.0;
      for (int m = 1; m <= bands; ++m)
        v += xi[m] * std::cos(kPi * m * x / grid.half_length);
      shape.values[i] = v;
    }
  }

  const double nshape = sobolev_norm(shape, idx);
  const double amp = s.delta * ref / (nshape > 0.0 ? nshape : 1.0);
  Profile out = phi;
  for (int i = 0; i < grid.n; ++i) out.values[i] += amp * shape.values[i];
  return out;
}

OrbitalTrace evolve_and_track(const Profile& u0, const Profile& phi,
                              double sigma, const Nonlinearity& nl,
                              const EvolveOptions& opt) {
  if (!(opt.horizon > 0.0))
    throw std::invalid_argument("evolve_and_track: horizon must be > 0");
  const Integrator integ(u0.grid, sigma, nl);
  const double dt_req = opt.dt > 0.0 ? opt.dt : integ.default_dt();
  const double mass0 = mass(u0);
  const double energy0 = energy(u0, sigma, nl);
  const double mass_den = std::max(std::abs(mass0), 1e-12);
  const double energy_den = std::max(std::abs(energy0), 1e-12);
  const double amp0 = std::max(max_abs(u0), 1e-300);
  const double period = 2.0 * u0.grid.half_length;

  OrbitalTrace trace;
  for (int halving = 0; halving <= opt.max_dt_halvings; ++halving) {
    const double dt_try = dt_req / static_cast<double>(1 << halving);
    const long nsteps =
        std::max<long>(1, static_cast<long>(std::ceil(opt.horizon / dt_try -
                                                      1e-9)));
    const double dt = opt.horizon / static_cast<double>(nsteps);

    trace = OrbitalTrace{};
    trace.dt_used = dt;
    EvolutionState state = integ.make_state(u0);

    double prev_raw = 0.0, y_unwrapped = 0.0;
    bool have_prev = false;
    double worst_energy = 0.0, worst_mass = 0.0;

    auto record = [&](const EvolutionState& st) -> bool {
      const Profile u = integ.to_profile(st);
      TracePoint pt;
      pt.t = st.t;
      pt.max_abs_u = max_abs(u);
      if (!all_finite(u) || !std::isfinite(pt.max_abs_u)) {
        trace.halted = true;
        trace.halt_reason = "non-finite values";
        trace.points.push_back(pt);
        return false;
      }
      const OrbitalDistanceResult od = orbital_distance(u, phi, sigma);
      pt.distance = od.distance;
      if (have_prev) {
        double jump = od.y_star - prev_raw;
        jump -= period * std::round(jump / period);
        y_unwrapped += jump;
      } else {
        y_unwrapped = od.y_star;
        have_prev = true;
      }
      prev_raw = od.y_star;
      pt.y_star = y_unwrapped;
      pt.energy_drift =
          std::abs(energy(u, sigma, nl) - energy0) / energy_den;
      pt.mass_drift = std::abs(mass(u) - mass0) / mass_den;
      worst_energy = std::max(worst_energy, pt.energy_drift);
      worst_mass = std::max(worst_mass, pt.mass_drift);
      trace.max_distance = std::max(trace.max_distance, pt.distance);
      trace.points.push_back(pt);
      if (pt.max_abs_u > opt.blowup_factor * amp0) {
        trace.halted = true;
        trace.halt_reason = "amplitude exceeded blow-up threshold";
        return false;
      }
      return true;
    };

    bool running = record(state);
    trace.initial_distance = trace.points.front().distance;
    for (long k = 0; running && k < nsteps; ++k) {
      integ.step(state, dt);
      const bool sample =
          ((k + 1) % std::max(1, opt.stride) == 0) || (k + 1 == nsteps);
      if (sample) running = record(state);
    }

    const bool busted = !trace.halted && (worst_energy > opt.energy_drift_budget ||
                                          worst_mass > opt.mass_drift_budget);
    if (!busted || halving == opt.max_dt_halvings) break;
  }

  const double tiny = 1e-10 * (1.0 + sobolev_norm(phi, {0.5 * sigma, 1.0}));
  trace.ratio =
      trace.initial_distance > tiny ? trace.max_distance / trace.initial_distance
                                    : 0.0;
  return trace;
}

OrbitalTrace stability_experiment(const Profile& phi, double sigma,
                                  const Nonlinearity& nl,
                                  const PerturbationSpec& pert,
                                  const EvolveOptions& opt) {
  return evolve_and_track(perturb(phi, sigma, pert), phi, sigma, nl, opt);
}

}  // namespace fkdv
