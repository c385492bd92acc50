#pragma once

// Model layer for the travelling-wave problem
//
//   d_t u + d_x(a u^p + u^q) - d_x D^sigma u = 0,
//   D^sigma phi + c phi - a phi^p - phi^q = 0,
//
// with sigma in [1, 2], a = +-1, integer 2 <= p < q, speed c > 0.
//
// Functionals (signed power integrals throughout):
//   E(v)   = 1/2 ||D^{sigma/2} v||^2 - int F(v),  F' = a s^p + s^q
//   M(v)   = 1/2 ||v||^2
//   S_c    = E + c M
//   K_c(v) = ||v||^2_{H_c} - a int v^{p+1} - int v^{q+1}   (||.||^2_{H_c} =
//            ||D^{sigma/2} v||^2 + c ||v||^2)
//   I_c    = S_c - K_c/(q+1),   J_c = S_c - K_c/(p+1)
//
// Normal forms obtained by amplitude/argument rescaling:
//   tilde:  D^sigma w + w - a w^p - c^alpha w^q = 0,  alpha = (q-p)/(p-1)
//   breve:  D^sigma w + w - a c^-beta w^p - w^q = 0,  beta  = (q-p)/(q-1)
// and the single-power family D^sigma w + w - w^r = 0 with its exact
// speed-scaling map psi_{c,r}(x) = c^{1/(r-1)} psi_{1,r}(c^{1/sigma} x).

#include <string>
#include <vector>

#include "fkdv/grid.hpp"
#include "fkdv/spectral.hpp"

namespace fkdv {

struct ModelParams {
  double sigma = 2.0;  // dispersion order, in [1, 2]
  int a = 1;           // +1 or -1
  int p = 2;           // lower power
  int q = 3;           // higher power, p < q
  double c = 1.0;      // wave speed, > 0

  ModelParams() = default;
  ModelParams(double sigma_, int a_, int p_, int q_, double c_);

  double alpha() const { return double(q - p) / double(p - 1); }
  double beta() const { return double(q - p) / double(q - 1); }
};

std::string to_json(const ModelParams& params);
ModelParams model_params_from_json(const std::string& text);

// Sign/parity taxonomy of ground states:
//   PositiveFocusing    : a = +1, q odd        (positive solution)
//   PositiveCompeting   : a = -1, p odd        (positive solution)
//   NegativeCompeting   : a = -1, p even, q odd (negative solution)
//   NoGroundState       : remaining parity cells
enum class ParityCase {
  PositiveFocusing,
  PositiveCompeting,
  NegativeCompeting,
  NoGroundState,
};

ParityCase classify(const ModelParams& params);
const char* to_string(ParityCase c);
// +1 or -1 for solvable cases; throws std::domain_error on NoGroundState.
int expected_sign(ParityCase c);

// L2-critical single-power exponent for dispersion sigma.
inline double critical_power(double sigma) { return 2.0 * sigma + 1.0; }

// Whether the sharp stability sufficient conditions hold, and on which
// side of the speed axis the guaranteed window sits.
struct StabilityWindow {
  bool known = false;          // conditions hold for some speed window
  bool small_speeds = false;   // window is (0, c*); else (c*, infinity)
  std::string description;     // human-readable annotation
};
StabilityWindow stability_window(const ModelParams& params);

// f(u) = sum_t coeff_t u^{power_t}; F is its primitive with F(0) = 0.
struct Nonlinearity {
  struct Term {
    double coeff = 0.0;
    int power = 0;
  };
  std::vector<Term> terms;

  static Nonlinearity double_power(int a, int p, int q);
  static Nonlinearity single_power(int r);

  double f(double s) const;
  double fprime(double s) const;
  double F(double s) const;
  int max_power() const;
};

// --- functionals on the physical model ---------------------------------

double mass(const Profile& v);
double energy(const Profile& v, const ModelParams& params);
double action(const Profile& v, const ModelParams& params);   // S_c
double nehari(const Profile& v, const ModelParams& params);   // K_c

struct AuxFunctionals {
  double I = 0.0;  // S_c - K_c/(q+1)
  double J = 0.0;  // S_c - K_c/(p+1)
};
AuxFunctionals aux_functionals(const Profile& v, const ModelParams& params);

// Generic versions over an arbitrary nonlinearity (used by the evolution
// and single-power code paths).
double energy(const Profile& v, double sigma, const Nonlinearity& nl);
double action(const Profile& v, double sigma, double c, const Nonlinearity& nl);
double nehari(const Profile& v, double sigma, double c, const Nonlinearity& nl);

// --- normalized (unit-speed) functional families -----------------------

struct FunctionalSet {
  double S = 0.0;
  double K = 0.0;
  double I = 0.0;  // S - K/(q+1)  (equals J for single power)
  double J = 0.0;  // S - K/(p+1)
};

// Single-power family at unit speed: S = 1/2||v||^2_{H^{sigma/2}} -
// 1/(r+1) int v^{r+1}, K = ||v||^2 - int v^{r+1}, I = J = S - K/(r+1).
FunctionalSet plain_functionals(const Profile& v, double sigma, int r);
// Unit-speed form with residual weight c^alpha on the high power.
FunctionalSet tilde_functionals(const Profile& v, const ModelParams& params);
// Unit-speed form with residual weight c^-beta on the low power.
FunctionalSet breve_functionals(const Profile& v, const ModelParams& params);

// Unit-speed normal forms: substituting the scaling below turns the
// stationary equation into  D^sigma w + w = f_w(w)  with the speed folded
// into a single weight.
//   Tilde: f_w(w) = a w^p + c^alpha w^q      (low-power anchor, small c)
//   Breve: f_w(w) = a c^-beta w^p + w^q      (high-power anchor, large c)
enum class NormalForm { Tilde, Breve };
Nonlinearity normal_form_nonlinearity(const ModelParams& params,
                                      NormalForm form);
// Tilde on the focusing cell, breve on the competing cells; throws
// std::domain_error when the cell admits no ground state.
NormalForm preferred_normal_form(const ModelParams& params);

// --- amplitude/argument rescaling --------------------------------------

// Declarative record of  phi(x) = c^{amplitude_exponent} w(c^{1/sigma} x).
struct ScalingMap {
  double amplitude_exponent = 0.0;
  double sigma = 2.0;
  double c = 1.0;

  static ScalingMap tilde(const ModelParams& params);
  static ScalingMap breve(const ModelParams& params);
  static ScalingMap single_power(int r, double sigma, double c);

  double amplitude_factor() const;  // c^{amplitude_exponent}
  double argument_factor() const;   // c^{1/sigma}
};

enum class ScalingDirection { ToPhysical, ToNormalized };

// Band-limited (trigonometric-interpolant) rescaling on the same grid.
// Throws std::domain_error when the rescaled profile no longer fits the
// box: tail at |x| = L above tail_budget * peak.
Profile apply_scaling(const Profile& v, const ScalingMap& map,
                      ScalingDirection direction, double tail_budget = 1e-3);

}  // namespace fkdv
