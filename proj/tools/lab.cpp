#include <cstdio>
#include <string>

#include "CLI11.hpp"

#include "fkdv/experiments.hpp"
#include "fkdv/model.hpp"

using namespace fkdv;

int main(int argc, char** argv) {
  CLI::App app{"Batch driver for the travelling-wave laboratory"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "lab_out";
  CLI::App* run = app.add_subcommand("run", "execute a recipe config file");
  run->add_option("config", config_path, "key = value config file")
      ->required()
      ->check(CLI::ExistingFile);
  run->add_option("--out", out_dir, "artifact root directory")
      ->capture_default_str();

  CLI::App* list =
      app.add_subcommand("list-recipes", "print the available recipes");

  double sigma = 2.0;
  int max_power = 9;
  CLI::App* tuples = app.add_subcommand(
      "tuples", "enumerate admissible double-power sign/exponent tuples");
  tuples->add_option("--sigma", sigma, "dispersion order, in [1, 2]")
      ->required();
  tuples->add_option("--max-power", max_power, "largest exponent to list")
      ->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      const ExperimentConfig cfg = ExperimentConfig::parse_file(config_path);
      const RunManifest m = run_recipe(cfg, out_dir);
      std::printf("recipe   %s\n", m.recipe.c_str());
      std::printf("hash     %s\n", m.config_hash.c_str());
      std::printf("dir      %s/%s-%s\n", out_dir.c_str(), m.recipe.c_str(),
                  m.config_hash.substr(0, 8).c_str());
      for (const CheckResult& ck : m.checks)
        std::printf("  [%s] %-34s value %-12.6g %s\n", ck.pass ? "PASS" : "FAIL",
                    ck.name.c_str(), ck.value, ck.note.c_str());
      std::printf("%s\n", m.all_pass() ? "ALL CHECKS PASS" : "CHECKS FAILED");
      return m.all_pass() ? 0 : 1;
    }

    if (list->parsed()) {
      for (const std::string& name : recipe_names())
        std::printf("%s\n", recipe_help(name).c_str());
      return 0;
    }

    // tuples
    std::printf("%4s %3s %3s  %-18s %4s  %s\n", "a", "p", "q", "case", "sign",
                "stability");
    for (const TupleRow& row : admissible_tuples(sigma, max_power)) {
      std::string note = "open";
      if (row.stability_known)
        note = row.window.empty() ? "known" : row.window;
      std::printf("%4d %3d %3d  %-18s %4d  %s\n", row.a, row.p, row.q,
                  to_string(row.parity), row.sign, note.c_str());
    }
    return 0;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
