#pragma once

// Linearized operator around a bound state and its low spectrum.
//
//   L v = D^sigma v + c v - (a p phi^{p-1} + q phi^{q-1}) v
//
// Self-adjoint on L2; the translation mode d_x phi spans its kernel.
// The coercivity constant C1 is the smallest eigenvalue of the
// generalized problem L v = mu (D^sigma + 1) v restricted to
// {v : (v, phi)_{L2} = (v, d_x phi)_{L2} = 0}.
//
// Solvers: dense symmetric (oracle mode, n <= dense_threshold) and a
// matrix-free preconditioned locally-optimal block iteration above.

#include <string>
#include <vector>

#include "fkdv/ground_state.hpp"
#include "fkdv/model.hpp"

namespace fkdv {

struct LinearOperator {
  double sigma = 2.0;
  double c = 1.0;
  Profile potential;  // pointwise multiplier a p phi^{p-1} + q phi^{q-1}

  static LinearOperator around_double_power(const Profile& phi,
                                            const ModelParams& params);
  // Single-power linearization r psi^{r-1} at speed c.
  static LinearOperator around_single_power(const Profile& psi, double sigma,
                                            int r, double c);
  // Unit-speed normal-form linearizations (potentials carry the c^alpha /
  // c^-beta weights; the shift is 1).
  static LinearOperator around_tilde(const Profile& w,
                                     const ModelParams& params);
  static LinearOperator around_breve(const Profile& w,
                                     const ModelParams& params);

  Profile apply(const Profile& v) const;
};

inline Profile apply_linearized(const LinearOperator& op, const Profile& v) {
  return op.apply(v);
}

// <L v, v>_{L2}
double quadratic_form(const LinearOperator& op, const Profile& v);

enum class SpectralMetric {
  L2,           // L v = mu v
  SobolevHalf,  // L v = mu (D^sigma + 1) v
};

struct EigenOptions {
  int count = 6;              // requested lowest eigenpairs
  SpectralMetric metric = SpectralMetric::L2;
  bool constrained = false;   // restrict to the two-constraint subspace
  int dense_threshold = 1024; // dense path for grid.n <= this
  double tol = 1e-9;          // relative eigenpair residual target
  int max_iterations = 3000;
};

struct SpectrumReport {
  std::vector<double> eigenvalues;  // ascending
  std::vector<Profile> eigenvectors;
  int negative_count = 0;           // mu < -1e-6 among computed
  double kernel_alignment = 0.0;    // |cos(min-|mu| vector, d_x phi)| in L2
  double coercivity_constant = 0.0; // lowest eigenvalue (meaningful when
                                    // constrained && SobolevHalf)
  double max_pair_residual = 0.0;   // max ||L v - mu B v|| / ||L v||
  bool dense_path = true;
};

// phi is the profile the operator was linearized around (used for the
// constraints and for kernel alignment).
SpectrumReport low_spectrum(const LinearOperator& op, const Profile& phi,
                            const EigenOptions& opt = {});

// --- coercivity sweep ---------------------------------------------------

struct CoercivityRow {
  double c = 0.0;
  double coercivity_constant = 0.0;  // constrained, SobolevHalf metric
  int negative_count = 0;            // unconstrained L2 metric
  double kernel_alignment = 0.0;
  double solve_residual = 0.0;
};

// Scaled-variable sweep: for each speed, solve the unit-speed normal form
// (tilde for the small-speed family, breve for the competing families)
// and report the constrained coercivity constant of its linearization.
std::vector<CoercivityRow> coercivity_sweep(const Grid& grid,
                                            const ModelParams& family,
                                            const std::vector<double>& speeds,
                                            const SolverOptions& opt = {});

// Single-power version at unit speed (one row).
CoercivityRow single_power_coercivity(const Grid& grid, double sigma, int r,
                                      const SolverOptions& opt = {});

// --- d(c) curve ---------------------------------------------------------

struct DCurvePoint {
  double c = 0.0;
  double d = 0.0;    // S_c(phi_c)
  double d2 = 0.0;   // second speed derivative (NaN at sweep endpoints)
};

struct DCurve {
  std::vector<DCurvePoint> points;
  double scaling_exponent = 0.0;  // log-log LS fit of d ~ c^e
  double exponent_formula = 0.0;  // 2/(r-1) + 1 - 1/sigma (single power)
};

DCurve d_curve_single_power(const Grid& grid, double sigma, int r,
                            const std::vector<double>& speeds,
                            const SolverOptions& opt = {});

// --- sufficient-condition checks at the single-power limiter ------------

struct CConditionsReport {
  double nehari_value = 0.0;        // K(psi), ~ 0
  double nehari_slope = 0.0;        // <K'(psi), psi>, < 0
  double c2_residual = 0.0;         // ||S''(psi) v2 + psi||_{L2} / ||psi||_{L2}
  double c2_residual_untapered = 0.0;
  double c2_residual_core = 0.0;    // |x| <= L/2 part
  double c2_residual_tail = 0.0;    // |x| > L/2 part
  double mass_pairing = 0.0;        // <M'(psi), v2>
  double mass_pairing_expected = 0.0;  // (2/(r-1) - 1/sigma) M(psi)
  double nehari_pairing = 0.0;         // <K'(psi), v2>
  double nehari_pairing_expected = 0.0;  // -||psi||_{L2}^2
  double translation_orthogonality = 0.0;  // (psi, d_x psi)_{L2}
  std::string compactness_note;  // spectral-compactness items: analytic only
};

// v2 = psi/(r-1) + (1/sigma) x d_x psi, with the x-weight smoothly
// tapered over the outer 10% of the box.
CConditionsReport check_c_conditions(const Profile& psi, double sigma, int r);

}  // namespace fkdv
