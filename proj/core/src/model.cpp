#include "fkdv/model.hpp"

#include <cmath>
#include <stdexcept>

#include "json.hpp"

namespace fkdv {

ModelParams::ModelParams(double sigma_, int a_, int p_, int q_, double c_)
    : sigma(sigma_), a(a_), p(p_), q(q_), c(c_) {
  if (!(sigma >= 1.0 && sigma <= 2.0))
    throw std::invalid_argument("ModelParams: sigma must lie in [1, 2]");
  if (a != 1 && a != -1)
    throw std::invalid_argument("ModelParams: a must be +1 or -1");
  if (p < 2 || q <= p || q > 15)
    throw std::invalid_argument("ModelParams: need integers 2 <= p < q <= 15");
  if (!(c > 0.0) || !std::isfinite(c))
    throw std::invalid_argument("ModelParams: speed c must be positive");
}

std::string to_json(const ModelParams& params) {
  nlohmann::json j = {{"sigma", params.sigma},
                      {"a", params.a},
                      {"p", params.p},
                      {"q", params.q},
                      {"c", params.c}};
  return j.dump();
}

ModelParams model_params_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  for (const char* key : {"sigma", "a", "p", "q", "c"})
    if (!j.contains(key))
      throw std::invalid_argument(std::string("model params JSON: missing ") +
                                  key);
  return ModelParams(j["sigma"].get<double>(), j["a"].get<int>(),
                     j["p"].get<int>(), j["q"].get<int>(),
                     j["c"].get<double>());
}

ParityCase classify(const ModelParams& params) {
  const bool p_odd = params.p % 2 == 1;
  const bool q_odd = params.q % 2 == 1;
  if (params.a == 1) {
    return q_odd ? ParityCase::PositiveFocusing : ParityCase::NoGroundState;
  }
  if (p_odd) return ParityCase::PositiveCompeting;
  if (q_odd) return ParityCase::NegativeCompeting;
  return ParityCase::NoGroundState;
}

const char* to_string(ParityCase c) {
  switch (c) {
    case ParityCase::PositiveFocusing: return "positive-focusing";
    case ParityCase::PositiveCompeting: return "positive-competing";
    case ParityCase::NegativeCompeting: return "negative-competing";
    case ParityCase::NoGroundState: return "no-ground-state";
  }
  return "?";
}

int expected_sign(ParityCase c) {
  switch (c) {
    case ParityCase::PositiveFocusing:
    case ParityCase::PositiveCompeting:
      return 1;
    case ParityCase::NegativeCompeting:
      return -1;
    case ParityCase::NoGroundState:
      break;
  }
  throw std::domain_error(
      "expected_sign: parity cell admits no ground state");
}

StabilityWindow stability_window(const ModelParams& params) {
  StabilityWindow w;
  const double crit = critical_power(params.sigma);
  switch (classify(params)) {
    case ParityCase::PositiveFocusing:
      w.known = params.p < crit;
      w.small_speeds = true;
      w.description = w.known
          ? "orbitally stable for small speeds (low power subcritical)"
          : "no guaranteed window (low power not subcritical)";
      break;
    case ParityCase::PositiveCompeting:
    case ParityCase::NegativeCompeting:
      w.known = params.q < crit;
      w.small_speeds = false;
      w.description = w.known
          ? "orbitally stable for large speeds (high power subcritical)"
          : "no guaranteed window (high power not subcritical)";
      break;
    case ParityCase::NoGroundState:
      w.description = "no ground state on this parity cell";
      break;
  }
  return w;
}

Nonlinearity Nonlinearity::double_power(int a, int p, int q) {
  return {{{double(a), p}, {1.0, q}}};
}

Nonlinearity Nonlinearity::single_power(int r) { return {{{1.0, r}}}; }

double Nonlinearity::f(double s) const {
  double acc = 0.0;
  for (const auto& t : terms) {
    double v = 1.0;
    for (int i = 0; i < t.power; ++i) v *= s;
    acc += t.coeff * v;
  }
  return acc;
}

double Nonlinearity::fprime(double s) const {
  double acc = 0.0;
  for (const auto& t : terms) {
    double v = 1.0;
    for (int i = 0; i < t.power - 1; ++i) v *= s;
    acc += t.coeff * t.power * v;
  }
  return acc;
}

double Nonlinearity::F(double s) const {
  double acc = 0.0;
  for (const auto& t : terms) {
    double v = 1.0;
    for (int i = 0; i < t.power + 1; ++i) v *= s;
    acc += t.coeff * v / (t.power + 1);
  }
  return acc;
}

int Nonlinearity::max_power() const {
  int m = 0;
  for (const auto& t : terms) m = std::max(m, t.power);
  return m;
}

double mass(const Profile& v) { return 0.5 * lp_integral(v, 2); }

double energy(const Profile& v, double sigma, const Nonlinearity& nl) {
  double kinetic = 0.5 * sobolev_inner(v, v, {sigma / 2.0, 0.0});
  double potential = 0.0;
  for (const auto& t : nl.terms)
    potential += t.coeff / (t.power + 1) * lp_integral(v, t.power + 1);
  return kinetic - potential;
}

double action(const Profile& v, double sigma, double c,
              const Nonlinearity& nl) {
  return energy(v, sigma, nl) + c * mass(v);
}

double nehari(const Profile& v, double sigma, double c,
              const Nonlinearity& nl) {
  double norm2 = sobolev_inner(v, v, {sigma / 2.0, c});
  double pot = 0.0;
  for (const auto& t : nl.terms) pot += t.coeff * lp_integral(v, t.power + 1);
  return norm2 - pot;
}

double energy(const Profile& v, const ModelParams& params) {
  return energy(v, params.sigma,
                Nonlinearity::double_power(params.a, params.p, params.q));
}

double action(const Profile& v, const ModelParams& params) {
  return energy(v, params) + params.c * mass(v);
}

double nehari(const Profile& v, const ModelParams& params) {
  return nehari(v, params.sigma, params.c,
                Nonlinearity::double_power(params.a, params.p, params.q));
}

AuxFunctionals aux_functionals(const Profile& v, const ModelParams& params) {
  const double S = action(v, params);
  const double K = nehari(v, params);
  return {S - K / (params.q + 1), S - K / (params.p + 1)};
}

FunctionalSet plain_functionals(const Profile& v, double sigma, int r) {
  FunctionalSet out;
  const double norm2 = sobolev_inner(v, v, {sigma / 2.0, 1.0});
  const double pot = lp_integral(v, r + 1);
  out.S = 0.5 * norm2 - pot / (r + 1);
  out.K = norm2 - pot;
  out.I = out.J = out.S - out.K / (r + 1);
  return out;
}

FunctionalSet tilde_functionals(const Profile& v, const ModelParams& params) {
  FunctionalSet out;
  const double w = std::pow(params.c, params.alpha());
  const double norm2 = sobolev_inner(v, v, {params.sigma / 2.0, 1.0});
  const double lo = lp_integral(v, params.p + 1);
  const double hi = lp_integral(v, params.q + 1);
  out.S = 0.5 * norm2 - params.a * lo / (params.p + 1) - w * hi / (params.q + 1);
  out.K = norm2 - params.a * lo - w * hi;
  out.I = out.S - out.K / (params.q + 1);
  out.J = out.S - out.K / (params.p + 1);
  return out;
}

FunctionalSet breve_functionals(const Profile& v, const ModelParams& params) {
  FunctionalSet out;
  const double w = std::pow(params.c, -params.beta());
  const double norm2 = sobolev_inner(v, v, {params.sigma / 2.0, 1.0});
  const double lo = lp_integral(v, params.p + 1);
  const double hi = lp_integral(v, params.q + 1);
  out.S = 0.5 * norm2 - params.a * w * lo / (params.p + 1) - hi / (params.q + 1);
  out.K = norm2 - params.a * w * lo - hi;
  out.I = out.S - out.K / (params.q + 1);
  out.J = out.S - out.K / (params.p + 1);
  return out;
}

Nonlinearity normal_form_nonlinearity(const ModelParams& params,
                                      NormalForm form) {
  if (form == NormalForm::Tilde) {
    return {{{double(params.a), params.p},
             {std::pow(params.c, params.alpha()), params.q}}};
  }
  return {{{params.a * std::pow(params.c, -params.beta()), params.p},
           {1.0, params.q}}};
}

NormalForm preferred_normal_form(const ModelParams& params) {
  switch (classify(params)) {
    case ParityCase::PositiveFocusing:
      return NormalForm::Tilde;
    case ParityCase::PositiveCompeting:
    case ParityCase::NegativeCompeting:
      return NormalForm::Breve;
    case ParityCase::NoGroundState:
      break;
  }
  throw std::domain_error(
      "preferred_normal_form: parity cell admits no ground state");
}

ScalingMap ScalingMap::tilde(const ModelParams& params) {
  return {1.0 / (params.p - 1), params.sigma, params.c};
}

ScalingMap ScalingMap::breve(const ModelParams& params) {
  return {1.0 / (params.q - 1), params.sigma, params.c};
}

ScalingMap ScalingMap::single_power(int r, double sigma, double c) {
  if (r < 2) throw std::invalid_argument("ScalingMap: power must be >= 2");
  return {1.0 / (r - 1), sigma, c};
}

double ScalingMap::amplitude_factor() const {
  return std::pow(c, amplitude_exponent);
}

double ScalingMap::argument_factor() const {
  return std::pow(c, 1.0 / sigma);
}

namespace {
double edge_ratio(const Profile& v) {
  const double peak = max_abs(v);
  if (peak == 0.0) return 0.0;
  double tail = 0.0;
  const double edge = 0.95 * v.grid.half_length;
  for (int i = 0; i < v.grid.n; ++i)
    if (std::abs(v.grid.x(i)) >= edge)
      tail = std::max(tail, std::abs(v.values[i]));
  return tail / peak;
}
}  // namespace

Profile apply_scaling(const Profile& v, const ScalingMap& map,
                      ScalingDirection direction, double tail_budget) {
  const double amp = map.amplitude_factor();
  const double arg = map.argument_factor();
  const double amp_eff =
      direction == ScalingDirection::ToPhysical ? amp : 1.0 / amp;
  const double arg_eff =
      direction == ScalingDirection::ToPhysical ? arg : 1.0 / arg;
  const double L = v.grid.half_length;
  // Compression samples the interpolant past the box edge, where the
  // periodic extension would alias an image of the profile back inside.
  // Decaying far fields make zero the faithful continuation there, provided
  // the input has actually decayed by the edge.
  if (arg_eff > 1.0 && edge_ratio(v) > tail_budget) {
    throw std::domain_error(
        "apply_scaling: input has not decayed at the box edge (tail/peak = " +
        std::to_string(edge_ratio(v)) + "), cannot compress faithfully");
  }
  const auto modes = to_modes(v);
  Profile out(v.grid);
  for (int i = 0; i < v.grid.n; ++i) {
    const double t = arg_eff * v.grid.x(i);
    out.values[i] =
        std::abs(t) <= L ? amp_eff * eval_trig(v.grid, modes, t) : 0.0;
  }
  // Stretching pushes mass toward the edge; refuse results that no longer
  // fit the box.
  if (edge_ratio(out) > tail_budget) {
    throw std::domain_error(
        "apply_scaling: rescaled support exceeds the box (tail/peak = " +
        std::to_string(edge_ratio(out)) + "); rerun with half_length >= " +
        std::to_string(2.0 * L / std::min(1.0, arg_eff)));
  }
  return out;
}

}  // namespace fkdv
