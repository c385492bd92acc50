#include <cstdio>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "fkdv/ground_state.hpp"
#include "fkdv/linearization.hpp"
#include "fkdv/profile_io.hpp"

using namespace fkdv;

int main(int argc, char** argv) {
  CLI::App app{
      "Lowest spectrum of the operator linearized around a computed "
      "ground state"};

  double sigma = 2.0, c = 1.0, L = 0.0;
  int a = 1, p = 2, q = 3, N = 0, count = 6, single_power = 0;
  std::string metric = "l2", out_path, json_path;
  bool constrained = false;

  app.add_option("--sigma", sigma, "dispersion order, in [1, 2]")
      ->capture_default_str();
  app.add_option("--a", a, "low-power sign, +1 or -1")->capture_default_str();
  app.add_option("--p", p, "low power")->capture_default_str();
  app.add_option("--q", q, "high power")->capture_default_str();
  app.add_option("--c", c, "wave speed, > 0")->capture_default_str();
  app.add_option("--single-power", single_power,
                 "use the one-power family at this power instead of (p, q)");
  app.add_option("--L", L, "half box length (0: pick by sigma)")
      ->capture_default_str();
  app.add_option("--N", N, "grid points (0: pick by sigma)")
      ->capture_default_str();
  app.add_option("--count", count, "eigenpairs to compute")
      ->capture_default_str();
  app.add_option("--metric", metric, "l2 | sobolev (generalized pencil)")
      ->check(CLI::IsMember({"l2", "sobolev"}))
      ->capture_default_str();
  app.add_flag("--constrained", constrained,
               "restrict to the subspace orthogonal to the state and its "
               "translation direction");
  app.add_option("--out", out_path, "write eigenvalues as CSV");
  app.add_option("--json", json_path, "write the spectral report as JSON");

  CLI11_PARSE(app, argc, argv);

  if (L <= 0.0) L = sigma >= 2.0 ? 30.0 : 200.0;
  if (N <= 0) N = sigma >= 2.0 ? 512 : 4096;

  try {
    const Grid grid(L, N);
    Profile state(grid);
    LinearOperator op;
    if (single_power > 0) {
      state = petviashvili(grid, sigma, single_power, c);
      op = LinearOperator::around_single_power(state, sigma, single_power, c);
    } else {
      const ModelParams params(sigma, a, p, q, c);
      state = solve_ground_state(grid, params).profile;
      op = LinearOperator::around_double_power(state, params);
    }

    EigenOptions opt;
    opt.count = count;
    opt.constrained = constrained;
    opt.metric = metric == "sobolev" ? SpectralMetric::SobolevHalf
                                     : SpectralMetric::L2;
    const SpectrumReport rep = low_spectrum(op, state, opt);

    std::string csv = "index,eigenvalue\n";
    for (size_t i = 0; i < rep.eigenvalues.size(); ++i) {
      std::printf("mu_%zu = %.12g\n", i, rep.eigenvalues[i]);
      char row[48];
      std::snprintf(row, sizeof row, "%zu,%.15g\n", i, rep.eigenvalues[i]);
      csv += row;
    }
    std::printf("negative_count   = %d\n", rep.negative_count);
    std::printf("kernel_alignment = %.12g\n", rep.kernel_alignment);
    if (constrained && opt.metric == SpectralMetric::SobolevHalf)
      std::printf("coercivity_constant = %.12g\n", rep.coercivity_constant);
    std::printf("max_pair_residual = %.3e (%s path)\n", rep.max_pair_residual,
                rep.dense_path ? "dense" : "iterative");

    if (!out_path.empty()) atomic_write_text(out_path, csv);
    if (!json_path.empty()) {
      nlohmann::ordered_json j;
      j["eigenvalues"] = rep.eigenvalues;
      j["negative_count"] = rep.negative_count;
      j["kernel_alignment"] = rep.kernel_alignment;
      j["coercivity_constant"] = rep.coercivity_constant;
      j["max_pair_residual"] = rep.max_pair_residual;
      j["dense_path"] = rep.dense_path;
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
