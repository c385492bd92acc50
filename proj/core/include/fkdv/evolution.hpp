#pragma once

// Time integration of  d_t u + d_x f(u) - d_x D^sigma u = 0  by a
// Fourier integrating-factor RK4: the linear phase exp(i k |k|^sigma t)
// is applied exactly; the nonlinear flux is evaluated pseudospectrally
// with zero-padding dealiasing sized for the highest power of f.
//
// Orbital distance to a reference profile is minimized over translates:
// the correlation over all grid shifts comes from one inverse transform,
// then the optimum is refined below grid resolution on the trigonometric
// interpolant.

#include <string>
#include <vector>

#include "fkdv/model.hpp"

namespace fkdv {

struct EvolutionState {
  Grid grid;
  ModeVector modes;  // unnormalised coefficients of u(t)
  double t = 0.0;
};

class Integrator {
 public:
  Integrator(const Grid& grid, double sigma, Nonlinearity nl);

  EvolutionState make_state(const Profile& u0, double t0 = 0.0) const;
  Profile to_profile(const EvolutionState& s) const;

  void step(EvolutionState& s, double dt) const;

  // 0.2 h^sigma / max(1, sigma): conservative nonlinear-CFL default.
  double default_dt() const;

  const Grid& grid() const { return grid_; }
  double sigma() const { return sigma_; }
  const Nonlinearity& nonlinearity() const { return nl_; }

  // integral of u over the box (conserved exactly by the scheme)
  double momentum(const EvolutionState& s) const;

 private:
  Grid grid_;
  double sigma_;
  Nonlinearity nl_;
  int n_pad_;
  std::vector<double> phase_k_;  // k |k|^sigma per mode (Nyquist zeroed)

  ModeVector nonlinear_rhs(const ModeVector& u) const;
  mutable double cached_dt_ = -1.0;
  mutable std::vector<std::complex<double>> e_half_, e_full_;
  void ensure_phases(double dt) const;
};

struct OrbitalDistanceResult {
  double distance = 0.0;  // inf_y ||u - phi(. - y)||_{H^{sigma/2}}
  double y_star = 0.0;    // minimizing shift, in [-L, L)
};
OrbitalDistanceResult orbital_distance(const Profile& u, const Profile& phi,
                                       double sigma);

enum class PerturbationKind { Bump, Rescale, Noise };
PerturbationKind perturbation_from_string(const std::string& name);
const char* to_string(PerturbationKind k);

struct PerturbationSpec {
  PerturbationKind kind = PerturbationKind::Rescale;
  double delta = 1e-2;
  unsigned seed = 20240817;  // noise family only
};

Profile perturb(const Profile& phi, double sigma, const PerturbationSpec& s);

struct EvolveOptions {
  double horizon = 100.0;  // T
  double dt = 0.0;         // 0 -> Integrator::default_dt()
  int stride = 50;         // steps between trace samples
  double blowup_factor = 1e3;       // halt when max|u| exceeds this x initial
  double energy_drift_budget = 1e-6;
  double mass_drift_budget = 1e-8;
  int max_dt_halvings = 2;  // retries when a smooth run busts the budgets
};

struct TracePoint {
  double t = 0.0;
  double distance = 0.0;  // to the phi orbit
  double y_star = 0.0;    // unwrapped tracked shift
  double energy_drift = 0.0;  // relative
  double mass_drift = 0.0;    // relative
  double max_abs_u = 0.0;
};

struct OrbitalTrace {
  std::vector<TracePoint> points;
  bool halted = false;
  std::string halt_reason;
  double initial_distance = 0.0;
  double max_distance = 0.0;
  double ratio = 0.0;  // max/initial; 0 when initial distance is ~ 0
  double dt_used = 0.0;
};

OrbitalTrace evolve_and_track(const Profile& u0, const Profile& phi,
                              double sigma, const Nonlinearity& nl,
                              const EvolveOptions& opt);

// Convenience wrapper: perturb phi, evolve, track the orbit.
OrbitalTrace stability_experiment(const Profile& phi, double sigma,
                                  const Nonlinearity& nl,
                                  const PerturbationSpec& pert,
                                  const EvolveOptions& opt);

}  // namespace fkdv
