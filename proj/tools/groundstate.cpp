#include <cstdio>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "fkdv/ground_state.hpp"
#include "fkdv/profile_io.hpp"
#include "fkdv/spectral.hpp"

using namespace fkdv;

int main(int argc, char** argv) {
  CLI::App app{
      "Solve the periodic ground-state travelling wave of the "
      "double-power dispersive model"};

  double sigma = 2.0, c = 1.0, L = 0.0;
  int a = 1, p = 2, q = 3, N = 0;
  std::string strategy = "continuation";
  std::string out_path, json_path;

  app.add_option("--sigma", sigma, "dispersion order, in [1, 2]")
      ->capture_default_str();
  app.add_option("--a", a, "low-power sign, +1 or -1")->capture_default_str();
  app.add_option("--p", p, "low power")->capture_default_str();
  app.add_option("--q", q, "high power")->capture_default_str();
  app.add_option("--c", c, "wave speed, > 0")->capture_default_str();
  app.add_option("--L", L, "half box length (0: pick by sigma)")
      ->capture_default_str();
  app.add_option("--N", N, "grid points (0: pick by sigma)")
      ->capture_default_str();
  app.add_option("--strategy", strategy, "continuation | direct")
      ->check(CLI::IsMember({"continuation", "direct"}))
      ->capture_default_str();
  app.add_option("--out", out_path, "write the profile (two-column text)");
  app.add_option("--json", json_path, "write the result scalars as JSON");

  CLI11_PARSE(app, argc, argv);

  if (L <= 0.0) L = sigma >= 2.0 ? 30.0 : 200.0;
  if (N <= 0) N = sigma >= 2.0 ? 512 : 4096;

  try {
    const ModelParams params(sigma, a, p, q, c);
    const Grid grid(L, N);
    const SolveStrategy strat = strategy == "direct"
                                    ? SolveStrategy::Direct
                                    : SolveStrategy::Continuation;
    const GroundStateResult res = solve_ground_state(grid, params, strat);

    std::printf("case      : %s\n", to_string(classify(params)));
    std::printf("strategy  : %s\n", to_string(res.strategy));
    std::printf("residual  : %.3e\n", res.residual);
    std::printf("action    : %.12g\n", res.action_value);
    std::printf("nehari    : %.3e\n", res.nehari_value);
    std::printf("energy    : %.12g\n", res.energy_value);
    std::printf("mass      : %.12g\n", res.mass_value);
    std::printf("sign      : %+d\n", res.sign_class);
    std::printf("peak      : %.12g\n", max_abs(res.profile));
    std::printf("iterations: %d\n", res.iterations);

    if (!out_path.empty()) save_profile(out_path, res.profile);
    if (!json_path.empty()) {
      nlohmann::ordered_json j;
      j["params"] = nlohmann::json::parse(to_json(res.params));
      j["grid"] = {{"L", L}, {"N", N}};
      j["strategy"] = to_string(res.strategy);
      j["residual"] = res.residual;
      j["action"] = res.action_value;
      j["nehari"] = res.nehari_value;
      j["energy"] = res.energy_value;
      j["mass"] = res.mass_value;
      j["sign"] = res.sign_class;
      j["iterations"] = res.iterations;
      atomic_write_text(json_path, j.dump(2) + "\n");
    }
  } catch (const NoGroundStateError& e) {
    std::fprintf(stderr, "refused: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 0;
}
