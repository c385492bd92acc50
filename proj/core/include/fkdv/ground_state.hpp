#pragma once

// Ground-state solvers and profile diagnostics.
//
// Single-power problems D^sigma w + c w = w^r are solved by the
// Petviashvili normalized fixed point
//     w <- M^gamma (D^sigma + c)^{-1} w^r,
//     M = <(D^sigma + c) w, w> / <w^r, w>,  gamma = r/(r-1).
//
// Double-power problems are solved either by speed continuation in the
// unit-speed normal form (seeded from the appropriate single-power limit
// and refined by preconditioned Newton-Krylov at each speed), or by
// direct constrained minimization (projected gradient with
// Nehari-manifold rescaling).  All iterations run in the even cosine
// subspace.

#include <optional>
#include <utility>
#include <vector>

#include "fkdv/model.hpp"

namespace fkdv {

// Parity cell admits no ground state; solvers refuse to run.
class NoGroundStateError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Iteration failed to converge (or landed on an inadmissible branch).
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SolverOptions {
  double residual_tol = 1e-9;  // relative to the solution norm
  int max_iterations = 5000;   // fixed-point / gradient iteration cap
  int max_newton_steps = 60;
  bool verbose = false;
};

// Residual norm surrogate ||r||_{H^{-sigma/2}_c} (mode-space weighted).
double dual_residual_norm(const Profile& r, double sigma, double c);

// (D^sigma + shift) v - f(v)
Profile stationary_residual(const Profile& v, double sigma, double shift,
                            const Nonlinearity& nl);

// --- single-power family ------------------------------------------------

Profile petviashvili(const Grid& grid, double sigma, int r, double c,
                     const SolverOptions& opt = {},
                     const Profile* seed = nullptr);

// Closed forms used for seeding and as test oracles:
// sigma = 2:  ((r+1)c/2)^{1/(r-1)} sech^{2/(r-1)}((r-1) sqrt(c) x / 2)
Profile sech_power_soliton(const Grid& grid, int r, double c);
// sigma = 1, r = 2, c = 1:  2 / (1 + x^2)
Profile algebraic_soliton(const Grid& grid);

// Damped, preconditioned Newton-Krylov refinement of a near-solution of
// (D^sigma + shift) v = f(v).  Drives the relative dual residual below
// opt.residual_tol or throws ConvergenceError.
Profile newton_polish(const Profile& v, double sigma, double shift,
                      const Nonlinearity& nl, const SolverOptions& opt = {},
                      int* steps = nullptr);

// --- double-power solver ------------------------------------------------

enum class SolveStrategy { Continuation, Direct };
const char* to_string(SolveStrategy s);

struct GroundStateResult {
  Profile profile;
  ModelParams params;
  SolveStrategy strategy = SolveStrategy::Continuation;
  double residual = 0.0;       // relative dual-norm residual
  double action_value = 0.0;   // S_c(phi); candidate d(c)
  double nehari_value = 0.0;   // K_c(phi)
  double energy_value = 0.0;
  double mass_value = 0.0;
  int sign_class = 0;          // +1 positive, -1 negative
  int iterations = 0;          // outer iterations / continuation steps
};

// Ground state of the unit-speed normal form on the fixed grid: the speed
// enters only through the weight on one of the powers, so profiles stay
// O(1) wide for every speed.  This is the object speed-limit studies
// converge on; solve_ground_state maps it back to physical variables.
struct NormalFormResult {
  Profile profile;       // w in normalized variables
  Nonlinearity scaled;   // weighted nonlinearity actually solved
  NormalForm form = NormalForm::Tilde;
  double residual = 0.0;
  int continuation_steps = 0;
  int newton_steps = 0;
};
NormalFormResult solve_normal_form(const Grid& grid, const ModelParams& params,
                                   const SolverOptions& opt = {});

GroundStateResult solve_ground_state(
    const Grid& grid, const ModelParams& params,
    SolveStrategy strategy = SolveStrategy::Continuation,
    const SolverOptions& opt = {});

// Largest relative gap between the two strategies' profiles (max-norm);
// diagnostic for branch uniqueness questions.
double strategy_gap(const Grid& grid, const ModelParams& params,
                    const SolverOptions& opt = {});

// --- Nehari manifold ----------------------------------------------------

// Smallest lambda > 0 with K_c(lambda v) = 0.  Throws std::domain_error
// when no positive root exists.
double nehari_rescale_factor(const Profile& v, const ModelParams& params);
Profile nehari_rescale(const Profile& v, const ModelParams& params);

// --- rearrangement ------------------------------------------------------

// Discrete symmetric-decreasing rearrangement: |v| sorted descending,
// placed center-out alternately (x = 0, +h, -h, +2h, ...).  Preserves the
// value multiset (hence every L^gamma norm) exactly.
Profile rearrange_decreasing(const Profile& v);

// --- positivity kernel --------------------------------------------------

struct BesselKernel {
  Profile values;  // periodized F^{-1}[(|k|^sigma + nu)^{-1}]
  double sigma = 2.0;
  double nu = 1.0;
};
BesselKernel bessel_kernel(const Grid& grid, double sigma, double nu);

// Max-norm gap of the fixed-point identity
//   phi = (D^sigma + c + lambda)^{-1} (lambda phi + a phi^p + phi^q),
//   lambda = sup(a phi^{p-1} + phi^{q-1}) + 1.
double kernel_fixed_point_gap(const Profile& phi, const ModelParams& params);

// --- regularity and decay diagnostics ----------------------------------

struct RegularityReport {
  // (s, ||phi||_{H^s}) at s = sigma/2, sigma, sigma+1, sigma+2
  std::vector<std::pair<double, double>> norms;
  double spectral_decay_rate = 0.0;  // fit log|phi_hat(k)| ~ a - rate*k
  double spectral_fit_r2 = 0.0;
};
RegularityReport regularity_check(const Profile& v, double sigma);

struct TailFit {
  double exponent = 0.0;   // decay exponent e of |v| ~ x^{-e} (image-aware)
  double raw_slope = 0.0;  // plain log-log least-squares slope (= -e_raw)
  double r_squared = 0.0;  // of the image-aware fit in log space
  double window_lo = 0.0;
  double window_hi = 0.0;
};

// Fit |v| ~ A (x^{-e} + (2L-x)^{-e}) over [window_lo, window_hi]
// (defaults [L/4, 3L/4]).  The second term absorbs the first periodic
// image, whose contribution to the plain slope does not vanish with L.
TailFit tail_decay_fit(const Profile& v, double window_lo = 0.0,
                       double window_hi = 0.0);

struct DecayReport {
  TailFit profile_fit;            // |v|
  TailFit weighted_gradient_fit;  // |x d_x v|
  TailFit second_derivative_fit;  // |d_x^2 v|
};
DecayReport tail_decay_report(const Profile& v);

}  // namespace fkdv
