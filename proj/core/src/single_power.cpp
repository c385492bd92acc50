#include <cmath>
#include <limits>
#include <sstream>

#include "fkdv/ground_state.hpp"

namespace fkdv {

double dual_residual_norm(const Profile& r, double sigma, double c) {
  const auto modes = to_modes(r);
  const Grid& g = r.grid;
  const int half = g.n / 2;
  auto weight = [&](double k) {
    return 1.0 / (std::pow(std::abs(k), sigma) + c);
  };
  double acc = weight(0.0) * std::norm(modes[0]);
  for (int j = 1; j < half; ++j)
    acc += 2.0 * weight(g.wavenumber(j)) * std::norm(modes[j]);
  acc += weight(g.wavenumber(half)) * std::norm(modes[half]);
  acc *= g.spacing() / g.n;
  return acc > 0.0 ? std::sqrt(acc) : 0.0;
}

Profile stationary_residual(const Profile& v, double sigma, double shift,
                            const Nonlinearity& nl) {
  Profile out = fractional_derivative(v, sigma);
  for (int i = 0; i < v.grid.n; ++i)
    out.values[i] += shift * v.values[i] - nl.f(v.values[i]);
  return out;
}

Profile sech_power_soliton(const Grid& grid, int r, double c) {
  if (r < 2) throw std::invalid_argument("sech_power_soliton: r must be >= 2");
  if (!(c > 0.0)) throw std::invalid_argument("sech_power_soliton: c > 0");
  const double amp = std::pow(c * (r + 1) / 2.0, 1.0 / (r - 1));
  const double rate = (r - 1) * std::sqrt(c) / 2.0;
  const double expo = 2.0 / (r - 1);
  Profile out(grid);
  for (int i = 0; i < grid.n; ++i) {
    double s = 1.0 / std::cosh(rate * grid.x(i));
    out.values[i] = amp * std::pow(s, expo);
  }
  return out;
}

Profile algebraic_soliton(const Grid& grid) {
  Profile out(grid);
  for (int i = 0; i < grid.n; ++i) {
    double x = grid.x(i);
    out.values[i] = 2.0 / (1.0 + x * x);
  }
  return out;
}

Profile petviashvili(const Grid& grid, double sigma, int r, double c,
                     const SolverOptions& opt, const Profile* seed) {
  if (!(sigma >= 1.0 && sigma <= 2.0))
    throw std::invalid_argument("petviashvili: sigma must lie in [1, 2]");
  if (r < 2) throw std::invalid_argument("petviashvili: r must be >= 2");
  if (!(c > 0.0)) throw std::invalid_argument("petviashvili: c must be > 0");

  Profile w(grid);
  if (seed) {
    if (!(seed->grid == grid))
      throw std::invalid_argument("petviashvili: seed grid mismatch");
    w = *seed;
  } else {
    // Generic even bump with the closed-form amplitude/width scalings.
    const double amp = std::pow(c * (r + 1) / 2.0, 1.0 / (r - 1));
    const double rate = (r - 1) * std::pow(c, 1.0 / sigma) / 2.0;
    for (int i = 0; i < grid.n; ++i) {
      double t = rate * grid.x(i);
      w.values[i] = amp * std::exp(-0.5 * t * t);
    }
  }
  even_symmetrize(w);

  const double gamma = double(r) / (r - 1);
  double last_residual = std::numeric_limits<double>::infinity();
  int stalled = 0;
  for (int it = 1; it <= opt.max_iterations; ++it) {
    Profile wr = pointwise_pow(w, r);
    const double num = sobolev_inner(w, w, {sigma / 2.0, c});
    const double den = l2_inner(wr, w);
    if (!(den > 0.0) || !std::isfinite(den) || !std::isfinite(num)) {
      std::ostringstream msg;
      msg << "petviashvili: normalization ratio degenerated at iteration "
          << it << " (num=" << num << ", den=" << den << ")";
      throw ConvergenceError(msg.str());
    }
    Profile w_next = std::pow(num / den, gamma) * invert_symbol(wr, sigma, c);
    even_symmetrize(w_next);
    w = std::move(w_next);

    Profile res = stationary_residual(w, sigma, c, Nonlinearity::single_power(r));
    const double rel = dual_residual_norm(res, sigma, c) /
                       sobolev_norm(w, {sigma / 2.0, c});
    if (rel <= opt.residual_tol) return w;
    // The fixed point converges linearly and can level off well above the
    // target; once it is close, hand the endgame to Newton.
    if (rel >= 0.5 * last_residual) {
      if (++stalled >= 8 && rel < 1e-3)
        return newton_polish(w, sigma, c, Nonlinearity::single_power(r), opt);
    } else {
      stalled = 0;
    }
    last_residual = rel;
  }
  if (last_residual < 1e-3)
    return newton_polish(w, sigma, c, Nonlinearity::single_power(r), opt);
  std::ostringstream msg;
  msg << "petviashvili: no convergence after " << opt.max_iterations
      << " iterations (last relative residual " << last_residual << ")";
  throw ConvergenceError(msg.str());
}

const char* to_string(SolveStrategy s) {
  return s == SolveStrategy::Continuation ? "continuation" : "direct";
}

}  // namespace fkdv
