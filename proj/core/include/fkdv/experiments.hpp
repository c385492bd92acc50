#pragma once

// Batch experiment runner: named recipes driven by flat key=value config
// files, emitting CSV tables, gnuplot-ready two-column .dat files, and a
// JSON manifest with config hash, tolerances, wall time, and pass/fail
// checks.  Runs are deterministic for a fixed config (seeded RNG,
// deterministic transforms); all file writes are atomic.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "fkdv/model.hpp"

namespace fkdv {

struct ExperimentConfig {
  std::string recipe;
  std::map<std::string, std::string> kv;  // defaults already folded in

  static ExperimentConfig parse_file(const std::filesystem::path& path);
  // text = "key = value" lines, '#' comments; must set "recipe".
  static ExperimentConfig parse_text(const std::string& text);

  bool has(const std::string& key) const;
  double get_double(const std::string& key) const;
  int get_int(const std::string& key) const;
  std::string get_string(const std::string& key) const;
  std::vector<double> get_double_list(const std::string& key) const;  // comma-sep

  // FNV-1a over canonical sorted "key=value" lines.
  std::uint64_t hash() const;
};

struct CheckResult {
  std::string name;
  bool pass = false;
  double value = 0.0;
  double threshold = 0.0;
  std::string note;
};

struct RunManifest {
  std::string recipe;
  std::string config_hash;  // hex
  std::string version;
  unsigned seed = 0;
  double wall_seconds = 0.0;
  std::vector<CheckResult> checks;
  std::vector<std::string> outputs;  // file names relative to run dir

  bool all_pass() const;
  std::string to_json() const;
};

// Executes the recipe named in the config; artifacts land in
// out_dir/<recipe>-<hash8>/.  Throws std::invalid_argument for unknown
// recipes or malformed configs.
RunManifest run_recipe(const ExperimentConfig& config,
                       const std::filesystem::path& out_dir);

std::vector<std::string> recipe_names();
std::string recipe_help(const std::string& name);

// --- admissible tuple enumeration --------------------------------------

struct TupleRow {
  int a = 1;
  int p = 2;
  int q = 3;
  ParityCase parity = ParityCase::NoGroundState;
  int sign = 0;              // expected ground-state sign, 0 when none
  bool stability_known = false;
  std::string window;        // speed-window annotation
};

// All (a, p, q) with 2 <= p < q <= max_power, annotated with the
// existence classification and the sharp stability hypothesis at sigma.
std::vector<TupleRow> admissible_tuples(double sigma, int max_power = 9);

}  // namespace fkdv
