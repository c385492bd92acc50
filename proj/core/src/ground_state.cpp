#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <vector>

#include "fkdv/ground_state.hpp"

// Double-power ground states.
//
// Continuation path: solve the unit-speed normal form (tilde near c = 0,
// breve near c = infinity), where the speed is a weight on one power and
// profiles keep O(1) width on a fixed grid.  Seed from the single-power
// limit of the anchored term, walk the weight geometrically to the target
// speed with Newton-Krylov at each stop, then map back to physical
// variables and polish once more on the physical residual.
//
// Direct path: projected-gradient minimization of the reduced functional
// whose eliminated power otherwise spoils coercivity (high power on the
// focusing cell, low power on the competing cell), with the iterate pulled
// back to the constraint manifold K_c = 0 after every step.

namespace fkdv {

namespace {

double ipow(double base, int m) {
  double r = 1.0;
  for (int i = 0; i < m; ++i) r *= base;
  return r;
}

double dot_values(const Profile& u, const Profile& v) {
  double s = 0.0;
  for (int i = 0; i < u.grid.n; ++i) s += u.values[i] * v.values[i];
  return s;
}

using LinearMap = std::function<Profile(const Profile&)>;

struct GmresOutcome {
  double relative_residual = 1.0;
  int iterations = 0;
};

// Restarted GMRES with modified Gram-Schmidt and Givens rotations;
// x accumulates across cycles (start from the zero profile).
GmresOutcome gmres_solve(const LinearMap& apply, const Profile& b, Profile& x,
                         int restart, int max_cycles, double tol) {
  const int n = b.grid.n;
  const double b_norm = std::sqrt(dot_values(b, b));
  GmresOutcome out;
  if (b_norm == 0.0) {
    out.relative_residual = 0.0;
    return out;
  }
  for (int cycle = 0; cycle < max_cycles; ++cycle) {
    Profile r = b;
    {
      Profile ax = apply(x);
      for (int i = 0; i < n; ++i) r.values[i] -= ax.values[i];
    }
    double beta = std::sqrt(dot_values(r, r));
    out.relative_residual = beta / b_norm;
    if (out.relative_residual <= tol) return out;

    std::vector<Profile> basis;
    basis.reserve(restart + 1);
    basis.push_back((1.0 / beta) * r);
    std::vector<std::vector<double>> H(restart + 1,
                                       std::vector<double>(restart, 0.0));
    std::vector<double> cs(restart, 0.0), sn(restart, 0.0), g(restart + 1, 0.0);
    g[0] = beta;
    int k = 0;
    bool happy = false;
    for (; k < restart; ++k) {
      Profile w = apply(basis[k]);
      for (int j = 0; j <= k; ++j) {
        H[j][k] = dot_values(w, basis[j]);
        for (int i = 0; i < n; ++i) w.values[i] -= H[j][k] * basis[j].values[i];
      }
      H[k + 1][k] = std::sqrt(dot_values(w, w));
      happy = H[k + 1][k] <= 1e-14 * (std::abs(H[k][k]) + 1.0);
      if (!happy) basis.push_back((1.0 / H[k + 1][k]) * w);
      for (int j = 0; j < k; ++j) {
        double t = cs[j] * H[j][k] + sn[j] * H[j + 1][k];
        H[j + 1][k] = -sn[j] * H[j][k] + cs[j] * H[j + 1][k];
        H[j][k] = t;
      }
      double denom = std::hypot(H[k][k], H[k + 1][k]);
      if (denom == 0.0) denom = 1.0;
      cs[k] = H[k][k] / denom;
      sn[k] = H[k + 1][k] / denom;
      H[k][k] = denom;
      H[k + 1][k] = 0.0;
      g[k + 1] = -sn[k] * g[k];
      g[k] *= cs[k];
      ++out.iterations;
      if (std::abs(g[k + 1]) <= tol * b_norm || happy) {
        ++k;
        break;
      }
    }
    std::vector<double> y(k, 0.0);
    for (int j = k - 1; j >= 0; --j) {
      double s = g[j];
      for (int l = j + 1; l < k; ++l) s -= H[j][l] * y[l];
      y[j] = H[j][j] != 0.0 ? s / H[j][j] : 0.0;
    }
    for (int j = 0; j < k; ++j)
      for (int i = 0; i < n; ++i) x.values[i] += y[j] * basis[j].values[i];
    out.relative_residual = std::abs(g[k]) / b_norm;
    if (out.relative_residual <= tol || happy) return out;
  }
  return out;
}

}  // namespace

Profile newton_polish(const Profile& v0, double sigma, double shift,
                      const Nonlinearity& nl, const SolverOptions& opt,
                      int* steps) {
  if (!(shift > 0.0))
    throw std::invalid_argument("newton_polish: shift must be positive");
  Profile v = v0;
  even_symmetrize(v);
  auto relative_residual = [&](const Profile& u) {
    Profile res = stationary_residual(u, sigma, shift, nl);
    double denom = std::max(sobolev_norm(u, {sigma / 2.0, shift}), 1e-300);
    return dual_residual_norm(res, sigma, shift) / denom;
  };
  double rel = relative_residual(v);
  int taken = 0;
  while (rel > opt.residual_tol) {
    if (taken >= opt.max_newton_steps) {
      std::ostringstream msg;
      msg << "newton_polish: no convergence after " << taken
          << " steps (relative residual " << rel << ")";
      throw ConvergenceError(msg.str());
    }
    Profile res = stationary_residual(v, sigma, shift, nl);
    Profile fp(v.grid);
    for (int i = 0; i < v.grid.n; ++i) fp.values[i] = nl.fprime(v.values[i]);
    // Preconditioned Jacobian  (D^sigma + shift)^{-1} J = I - M^{-1} f'(v);
    // a compact perturbation of the identity, so short Krylov spaces do.
    auto apply = [&](const Profile& u) {
      Profile fu(u.grid);
      for (int i = 0; i < u.grid.n; ++i)
        fu.values[i] = fp.values[i] * u.values[i];
      Profile smoothed = invert_symbol(fu, sigma, shift);
      Profile out = u;
      for (int i = 0; i < u.grid.n; ++i) out.values[i] -= smoothed.values[i];
      return out;
    };
    Profile b = invert_symbol(res, sigma, shift);
    Profile delta(v.grid);
    gmres_solve(apply, b, delta, 40, 4, 1e-4);

    bool accepted = false;
    double step = 1.0;
    for (int h = 0; h < 9 && !accepted; ++h, step *= 0.5) {
      Profile trial = v;
      for (int i = 0; i < v.grid.n; ++i)
        trial.values[i] -= step * delta.values[i];
      even_symmetrize(trial);
      if (!all_finite(trial)) continue;
      double trial_rel = relative_residual(trial);
      if (trial_rel < rel * (1.0 - 0.2 * step) ||
          trial_rel <= opt.residual_tol) {
        v = std::move(trial);
        rel = trial_rel;
        accepted = true;
      }
    }
    ++taken;
    if (!accepted) {
      std::ostringstream msg;
      msg << "newton_polish: line search stalled at relative residual " << rel;
      throw ConvergenceError(msg.str());
    }
  }
  if (steps) *steps = taken;
  return v;
}

// --- Nehari manifold -----------------------------------------------------

double nehari_rescale_factor(const Profile& v, const ModelParams& params) {
  const double norm2 = sobolev_inner(v, v, {params.sigma / 2.0, params.c});
  const double lo_int = lp_integral(v, params.p + 1);
  const double hi_int = lp_integral(v, params.q + 1);
  if (!(norm2 > 0.0))
    throw std::domain_error("nehari_rescale_factor: zero profile");
  auto h = [&](double lam) {
    return norm2 - params.a * std::pow(lam, params.p - 1) * lo_int -
           std::pow(lam, params.q - 1) * hi_int;
  };
  // h(0+) = ||v||^2 > 0: the smallest root is the first sign change on an
  // expanding log grid.
  double left = 1e-8;
  double h_left = h(left);
  double right = 0.0;
  bool bracketed = false;
  for (double lam = left * 1.05; lam <= 1e9; lam *= 1.05) {
    double h_lam = h(lam);
    if (h_left > 0.0 && h_lam <= 0.0) {
      right = lam;
      bracketed = true;
      break;
    }
    left = lam;
    h_left = h_lam;
  }
  if (!bracketed)
    throw std::domain_error(
        "nehari_rescale_factor: the constraint has no positive root along "
        "this ray");
  for (int it = 0; it < 120; ++it) {
    double mid = 0.5 * (left + right);
    (h(mid) > 0.0 ? left : right) = mid;
  }
  return 0.5 * (left + right);
}

Profile nehari_rescale(const Profile& v, const ModelParams& params) {
  return nehari_rescale_factor(v, params) * v;
}

// --- normal-form continuation -------------------------------------------

NormalFormResult solve_normal_form(const Grid& grid, const ModelParams& params,
                                   const SolverOptions& opt) {
  const ParityCase cell = classify(params);
  if (cell == ParityCase::NoGroundState) {
    std::ostringstream msg;
    msg << "solve_normal_form: no ground state when a=" << params.a
        << " with powers (" << params.p << ", " << params.q << ")";
    throw NoGroundStateError(msg.str());
  }
  NormalFormResult out;
  out.form = preferred_normal_form(params);
  const bool tilde = out.form == NormalForm::Tilde;
  const int sign = expected_sign(cell);
  const int anchor_power = tilde ? params.p : params.q;
  const double c_anchor =
      tilde ? std::min(params.c, 0.05) : std::max(params.c, 50.0);

  Profile w = petviashvili(grid, params.sigma, anchor_power, 1.0, opt);
  if (sign < 0) w = -1.0 * w;

  std::vector<double> path;
  path.push_back(c_anchor);
  const double ratio = std::pow(2.0, 0.25);
  if (tilde) {
    for (double s = c_anchor; s * ratio < params.c;) path.push_back(s *= ratio);
  } else {
    for (double s = c_anchor; s / ratio > params.c;) path.push_back(s /= ratio);
  }
  if (path.back() != params.c) path.push_back(params.c);

  auto weighted = [&](double speed) {
    ModelParams at(params.sigma, params.a, params.p, params.q, speed);
    return normal_form_nonlinearity(at, out.form);
  };

  int continuation_steps = 0, newton_total = 0;
  double from = path.front();
  // solve at the anchor, then walk the path with log-midpoint backoff
  {
    int ns = 0;
    w = newton_polish(w, params.sigma, 1.0, weighted(from), opt, &ns);
    newton_total += ns;
    ++continuation_steps;
  }
  for (size_t idx = 1; idx < path.size(); ++idx) {
    const double target = path[idx];
    while (from != target) {
      double attempt = target;
      int backoffs = 0;
      for (;;) {
        bool jumped = false;
        try {
          int ns = 0;
          Profile w_try =
              newton_polish(w, params.sigma, 1.0, weighted(attempt), opt, &ns);
          jumped = std::abs(max_abs(w_try) - max_abs(w)) > 0.25 * max_abs(w);
          if (!jumped) {
            newton_total += ns;
            w = std::move(w_try);
            break;
          }
        } catch (const ConvergenceError&) {
        }
        attempt = std::exp(0.5 * (std::log(from) + std::log(attempt)));
        if (++backoffs > 12) {
          std::ostringstream msg;
          msg << "solve_normal_form: continuation " << (jumped ? "jumped off"
                                                              : "lost")
              << " the branch near speed " << attempt;
          throw ConvergenceError(msg.str());
        }
      }
      from = attempt;
      ++continuation_steps;
    }
  }

  out.scaled = weighted(params.c);
  out.profile = std::move(w);
  {
    Profile res =
        stationary_residual(out.profile, params.sigma, 1.0, out.scaled);
    out.residual = dual_residual_norm(res, params.sigma, 1.0) /
                   std::max(sobolev_norm(out.profile, {params.sigma / 2.0, 1.0}),
                            1e-300);
  }
  out.continuation_steps = continuation_steps;
  out.newton_steps = newton_total;
  return out;
}

// --- direct constrained minimization ------------------------------------

namespace {

Profile direct_minimize(const Grid& grid, const ModelParams& params,
                        const SolverOptions& opt, int* iterations) {
  const ParityCase cell = classify(params);
  if (cell == ParityCase::NegativeCompeting) {
    // The sign flip v -> -v maps this cell onto the all-focusing problem
    // with the same powers; minimize there and flip back.
    ModelParams mirrored(params.sigma, +1, params.p, params.q, params.c);
    return -1.0 * direct_minimize(grid, mirrored, opt, iterations);
  }
  const bool focusing = cell == ParityCase::PositiveFocusing;
  const auto nl = Nonlinearity::double_power(params.a, params.p, params.q);
  const double pp = params.p, qq = params.q;

  // Reduced functional: J (drops the high power) on the focusing cell,
  // I (drops the low power) on the competing cell.
  auto reduced_gradient = [&](const Profile& v) {
    Profile lin = fractional_derivative(v, params.sigma);
    for (int i = 0; i < grid.n; ++i) lin.values[i] += params.c * v.values[i];
    Profile out(grid);
    if (focusing) {
      Profile hi = pointwise_pow(v, params.q);
      const double c_lin = (pp - 1) / (pp + 1), c_pow = (qq - pp) / (pp + 1);
      for (int i = 0; i < grid.n; ++i)
        out.values[i] = c_lin * lin.values[i] + c_pow * hi.values[i];
    } else {
      Profile lo = pointwise_pow(v, params.p);
      const double c_lin = (qq - 1) / (qq + 1);
      const double c_pow = -params.a * (qq - pp) / (qq + 1);
      for (int i = 0; i < grid.n; ++i)
        out.values[i] = c_lin * lin.values[i] + c_pow * lo.values[i];
    }
    return out;
  };

  const int seed_power = focusing ? params.p : params.q;
  Profile v = petviashvili(grid, params.sigma, seed_power, params.c, opt);
  v = nehari_rescale(v, params);
  double value = action(v, params);

  int it = 0;
  double tau = 1.0;
  for (; it < opt.max_iterations; ++it) {
    Profile res = stationary_residual(v, params.sigma, params.c, nl);
    double rel = dual_residual_norm(res, params.sigma, params.c) /
                 std::max(sobolev_norm(v, {params.sigma / 2.0, params.c}),
                          1e-300);
    if (rel <= 1e-5) break;

    Profile raw = reduced_gradient(v);
    Profile dir = invert_symbol(raw, params.sigma, params.c);

    // The reduced gradient keeps a component along the constraint normal
    // that does not vanish even at the minimizer, so project the
    // preconditioned gradient onto the constraint tangent in the
    // preconditioner metric.  The predicted decrease is then nonnegative
    // by Cauchy-Schwarz and vanishes only at a constrained critical point.
    Profile kgrad = fractional_derivative(v, params.sigma);
    for (int i = 0; i < grid.n; ++i) {
      const double s = v.values[i];
      kgrad.values[i] = 2.0 * (kgrad.values[i] + params.c * s) -
                        params.a * (pp + 1) * ipow(s, params.p) -
                        (qq + 1) * ipow(s, params.q);
    }
    Profile kdir = invert_symbol(kgrad, params.sigma, params.c);
    const double along = dot_values(kgrad, kdir);
    if (!(along > 0.0)) break;
    const double theta = dot_values(kgrad, dir) / along;
    for (int i = 0; i < grid.n; ++i) dir.values[i] -= theta * kdir.values[i];
    double descent = dot_values(raw, dir) * grid.spacing();
    if (!(descent > 0.0)) break;

    bool moved = false;
    for (int h = 0; h < 14 && !moved; ++h, tau *= 0.5) {
      Profile trial = v;
      for (int i = 0; i < grid.n; ++i)
        trial.values[i] -= tau * dir.values[i];
      even_symmetrize(trial);
      try {
        trial = nehari_rescale(trial, params);
      } catch (const std::domain_error&) {
        continue;  // stepped off the admissible cone; shorten
      }
      double trial_value = action(trial, params);
      if (trial_value <= value - 1e-4 * tau * descent ||
          (h >= 10 && trial_value < value - 1e-12 * std::abs(value))) {
        v = std::move(trial);
        value = trial_value;
        moved = true;
        tau = std::min(tau * 1.5, 4.0);
      }
    }
    if (!moved) break;  // flat to line-search resolution; Newton takes over
  }
  if (iterations) *iterations = it;

  Profile res = stationary_residual(v, params.sigma, params.c, nl);
  double rel =
      dual_residual_norm(res, params.sigma, params.c) /
      std::max(sobolev_norm(v, {params.sigma / 2.0, params.c}), 1e-300);
  if (rel > 1e-2) {
    std::ostringstream msg;
    msg << "direct minimization did not approach a stationary point "
           "(relative residual "
        << rel << " after " << it << " iterations)";
    throw ConvergenceError(msg.str());
  }
  return v;
}

void validate_ground_state(const Profile& phi, const ModelParams& params,
                           int sign, double rel_residual,
                           const SolverOptions& opt) {
  const double peak = max_abs(phi);
  if (!(peak > 0.0) || !all_finite(phi))
    throw ConvergenceError("ground-state validation: degenerate profile");
  double wrong_sign = 0.0;
  for (double s : phi.values)
    wrong_sign = std::max(wrong_sign, sign > 0 ? -s : s);
  if (wrong_sign > 1e-6 * peak) {
    std::ostringstream msg;
    msg << "ground-state validation: profile is not single-signed "
        << "(wrong-sign magnitude " << wrong_sign << " vs peak " << peak
        << ")";
    throw ConvergenceError(msg.str());
  }
  if (max_asymmetry(phi) > 1e-8 * peak)
    throw ConvergenceError("ground-state validation: profile is not even");
  const int n = phi.grid.n;
  double running = std::abs(phi.values[n / 2]);
  for (int i = n / 2 + 1; i < n; ++i) {
    double mag = std::abs(phi.values[i]);
    if (mag > running + 1e-6 * peak) {
      std::ostringstream msg;
      msg << "ground-state validation: |profile| increases away from the "
             "center near x = "
          << phi.grid.x(i);
      throw ConvergenceError(msg.str());
    }
    running = std::min(running, mag);
  }
  const double constraint = nehari(phi, params);
  const double norm2 =
      sobolev_inner(phi, phi, {params.sigma / 2.0, params.c});
  if (std::abs(constraint) > 1e-6 * norm2) {
    std::ostringstream msg;
    msg << "ground-state validation: off the constraint manifold (K = "
        << constraint << " vs ||phi||^2 = " << norm2 << ")";
    throw ConvergenceError(msg.str());
  }
  if (rel_residual > 10.0 * opt.residual_tol) {
    std::ostringstream msg;
    msg << "ground-state validation: residual " << rel_residual
        << " above tolerance";
    throw ConvergenceError(msg.str());
  }
}

}  // namespace

GroundStateResult solve_ground_state(const Grid& grid,
                                     const ModelParams& params,
                                     SolveStrategy strategy,
                                     const SolverOptions& opt) {
  const ParityCase cell = classify(params);
  if (cell == ParityCase::NoGroundState) {
    std::ostringstream msg;
    msg << "solve_ground_state: no ground state when a=" << params.a
        << " with powers (" << params.p << ", " << params.q << ")";
    throw NoGroundStateError(msg.str());
  }
  const int sign = expected_sign(cell);
  const auto nl = Nonlinearity::double_power(params.a, params.p, params.q);

  Profile phi(grid);
  int iterations = 0;
  if (strategy == SolveStrategy::Continuation) {
    auto nf = solve_normal_form(grid, params, opt);
    const ScalingMap map = nf.form == NormalForm::Tilde
                               ? ScalingMap::tilde(params)
                               : ScalingMap::breve(params);
    phi = apply_scaling(nf.profile, map, ScalingDirection::ToPhysical);
    iterations = nf.continuation_steps;
  } else {
    phi = direct_minimize(grid, params, opt, &iterations);
  }
  int polish_steps = 0;
  phi = newton_polish(phi, params.sigma, params.c, nl, opt, &polish_steps);

  GroundStateResult out{Profile(grid), params, strategy, 0.0, 0.0, 0.0,
                        0.0,           0.0,    sign,     iterations};
  {
    Profile res = stationary_residual(phi, params.sigma, params.c, nl);
    out.residual =
        dual_residual_norm(res, params.sigma, params.c) /
        std::max(sobolev_norm(phi, {params.sigma / 2.0, params.c}), 1e-300);
  }
  validate_ground_state(phi, params, sign, out.residual, opt);
  out.action_value = action(phi, params);
  out.nehari_value = nehari(phi, params);
  out.energy_value = energy(phi, params);
  out.mass_value = mass(phi);
  out.profile = std::move(phi);
  return out;
}

double strategy_gap(const Grid& grid, const ModelParams& params,
                    const SolverOptions& opt) {
  auto a = solve_ground_state(grid, params, SolveStrategy::Continuation, opt);
  auto b = solve_ground_state(grid, params, SolveStrategy::Direct, opt);
  double gap = 0.0;
  for (int i = 0; i < grid.n; ++i)
    gap = std::max(gap,
                   std::abs(a.profile.values[i] - b.profile.values[i]));
  return gap / std::max(max_abs(a.profile), 1e-300);
}

// --- rearrangement -------------------------------------------------------

Profile rearrange_decreasing(const Profile& v) {
  const int n = v.grid.n;
  std::vector<double> mags(n);
  for (int i = 0; i < n; ++i) mags[i] = std::abs(v.values[i]);
  std::sort(mags.begin(), mags.end(), std::greater<double>());
  Profile out(v.grid);
  const int center = n / 2;
  out.values[center] = mags[0];
  for (int m = 1; m < n; ++m) {
    const int offset = (m + 1) / 2;
    const int idx = (m % 2 == 1) ? (center + offset) % n : center - offset;
    out.values[idx] = mags[m];
  }
  return out;
}

// --- positivity kernel ---------------------------------------------------

BesselKernel bessel_kernel(const Grid& grid, double sigma, double nu) {
  if (!(sigma >= 1.0 && sigma <= 2.0))
    throw std::invalid_argument("bessel_kernel: sigma must lie in [1, 2]");
  if (!(nu > 0.0))
    throw std::invalid_argument("bessel_kernel: nu must be positive");
  ModeVector modes(grid.mode_count());
  const double scale = grid.n / (2.0 * grid.half_length);
  for (int j = 0; j < grid.mode_count(); ++j) {
    const double k = grid.wavenumber(j);
    // The grid origin sits at index n/2, so mode j carries e^{-i k_j L} =
    // (-1)^j to place the kernel peak there instead of at the array edge.
    const double parity = (j % 2 == 0) ? 1.0 : -1.0;
    modes[j] = parity * scale / (std::pow(std::abs(k), sigma) + nu);
  }
  return {from_modes(grid, modes), sigma, nu};
}

double kernel_fixed_point_gap(const Profile& phi, const ModelParams& params) {
  double steepest = -std::numeric_limits<double>::infinity();
  for (double s : phi.values)
    steepest = std::max(steepest,
                        params.a * ipow(s, params.p - 1) + ipow(s, params.q - 1));
  const double lambda = steepest + 1.0;
  if (!(params.c + lambda > 0.0))
    throw std::domain_error(
        "kernel_fixed_point_gap: shifted symbol is not positive");
  Profile rhs(phi.grid);
  for (int i = 0; i < phi.grid.n; ++i) {
    const double s = phi.values[i];
    rhs.values[i] =
        lambda * s + params.a * ipow(s, params.p) + ipow(s, params.q);
  }
  Profile mapped = invert_symbol(rhs, params.sigma, params.c + lambda);
  double gap = 0.0;
  for (int i = 0; i < phi.grid.n; ++i)
    gap = std::max(gap, std::abs(mapped.values[i] - phi.values[i]));
  return gap;
}

// --- regularity and decay ------------------------------------------------

namespace {

void linear_fit(const std::vector<double>& xs, const std::vector<double>& ys,
                double* slope, double* intercept, double* r2) {
  const size_t n = xs.size();
  double mx = 0, my = 0;
  for (size_t i = 0; i < n; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (size_t i = 0; i < n; ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  *slope = sxx > 0 ? sxy / sxx : 0.0;
  *intercept = my - *slope * mx;
  *r2 = (sxx > 0 && syy > 0) ? (sxy * sxy) / (sxx * syy) : 0.0;
}

}  // namespace

RegularityReport regularity_check(const Profile& v, double sigma) {
  RegularityReport out;
  for (double s : {sigma / 2.0, sigma, sigma + 1.0, sigma + 2.0})
    out.norms.emplace_back(s, sobolev_norm(v, {s, 1.0}));
  const auto modes = to_modes(v);
  const int half = v.grid.n / 2;
  double top = 0.0;
  for (int j = 1; j <= half; ++j)
    top = std::max(top, std::abs(modes[j]));
  std::vector<double> ks, la;
  for (int j = 1; j <= half; ++j) {
    const double amp = std::abs(modes[j]);
    if (amp > 1e-14 * top) {
      ks.push_back(v.grid.wavenumber(j));
      la.push_back(std::log(amp));
    }
  }
  if (ks.size() >= 8) {
    double slope, intercept;
    linear_fit(ks, la, &slope, &intercept, &out.spectral_fit_r2);
    out.spectral_decay_rate = -slope;
  }
  return out;
}

namespace {

// Shared tail-fit core.  model_at(x, e) is the positive image-aware model
// magnitude for candidate exponent e; the overall amplitude is profiled out
// in log space, and e is located by golden-section search on the residual
// sum of squares.
template <typename Model>
TailFit fit_tail(const Profile& v, double window_lo, double window_hi,
                 Model&& model_at) {
  const Grid& g = v.grid;
  const double L = g.half_length;
  TailFit out;
  out.window_lo = window_lo > 0.0 ? window_lo : L / 4.0;
  out.window_hi = window_hi > 0.0 ? window_hi : 3.0 * L / 4.0;
  const double peak = max_abs(v);
  if (peak == 0.0) return out;

  std::vector<double> xs, logs;
  for (int i = 0; i < g.n; ++i) {
    const double x = g.x(i);
    if (x < out.window_lo || x > out.window_hi) continue;
    const double mag = std::abs(v.values[i]);
    if (mag > 1e-15 * peak) {
      xs.push_back(x);
      logs.push_back(std::log(mag));
    }
  }
  if (xs.size() < 10) return out;

  {
    std::vector<double> lx(xs.size());
    for (size_t i = 0; i < xs.size(); ++i) lx[i] = std::log(xs[i]);
    double intercept, r2;
    linear_fit(lx, logs, &out.raw_slope, &intercept, &r2);
  }

  double sy = 0, syy = 0;
  for (double y : logs) sy += y;
  const double mean_y = sy / logs.size();
  for (double y : logs) syy += (y - mean_y) * (y - mean_y);
  auto sse_for = [&](double e) {
    double acc = 0.0, mean_gap = 0.0;
    std::vector<double> model(xs.size());
    for (size_t i = 0; i < xs.size(); ++i) {
      model[i] = std::log(std::max(model_at(xs[i], e), 1e-300));
      mean_gap += logs[i] - model[i];
    }
    mean_gap /= xs.size();
    for (size_t i = 0; i < xs.size(); ++i) {
      const double r = logs[i] - model[i] - mean_gap;
      acc += r * r;
    }
    return acc;
  };
  const double gold = (std::sqrt(5.0) - 1.0) / 2.0;
  double lo = 0.2, hi = 14.0;
  double m1 = hi - gold * (hi - lo), m2 = lo + gold * (hi - lo);
  double f1 = sse_for(m1), f2 = sse_for(m2);
  for (int it = 0; it < 120; ++it) {
    if (f1 <= f2) {
      hi = m2;
      m2 = m1;
      f2 = f1;
      m1 = hi - gold * (hi - lo);
      f1 = sse_for(m1);
    } else {
      lo = m1;
      m1 = m2;
      f1 = f2;
      m2 = lo + gold * (hi - lo);
      f2 = sse_for(m2);
    }
  }
  out.exponent = 0.5 * (lo + hi);
  const double best = sse_for(out.exponent);
  out.r_squared = syy > 0.0 ? std::max(0.0, 1.0 - best / syy) : 0.0;
  return out;
}

}  // namespace

TailFit tail_decay_fit(const Profile& v, double window_lo, double window_hi) {
  // Image-aware model |v| ~ A (x^-e + (2L-x)^-e): the nearest periodic
  // image contributes a slope bias that does not vanish as L grows, so it
  // is carried in the model instead of ignored.
  const double L = v.grid.half_length;
  return fit_tail(v, window_lo, window_hi, [L](double x, double e) {
    return std::pow(x, -e) + std::pow(2 * L - x, -e);
  });
}

DecayReport tail_decay_report(const Profile& v) {
  DecayReport out;
  out.profile_fit = tail_decay_fit(v);
  Profile dv = derivative(v);
  Profile weighted(v.grid);
  for (int i = 0; i < v.grid.n; ++i)
    weighted.values[i] = v.grid.x(i) * dv.values[i];
  // The derivative of a decaying even profile is odd about the center, so
  // the nearest periodic image enters with the opposite sign and the two
  // tail terms partially cancel: |x v'| ~ A |x^-e - x (2L-x)^-(e+1)|.
  const double L = v.grid.half_length;
  out.weighted_gradient_fit =
      fit_tail(weighted, 0.0, 0.0, [L](double x, double e) {
        return std::abs(std::pow(x, -e) -
                        x * std::pow(2 * L - x, -e - 1.0));
      });
  out.second_derivative_fit = tail_decay_fit(derivative(v, 2));
  return out;
}

}  // namespace fkdv
