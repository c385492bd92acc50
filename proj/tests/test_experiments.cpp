#include "doctest.h"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "fkdv/experiments.hpp"
#include "fkdv/profile_io.hpp"

using namespace fkdv;

namespace {

std::filesystem::path fresh_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// rows of a CSV artifact, header and comment lines stripped
std::vector<std::vector<std::string>> csv_rows(
    const std::filesystem::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::stringstream ss(slurp(p));
  std::string line;
  bool header_seen = false;
  while (std::getline(ss, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      header_seen = true;
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace

TEST_CASE("config parsing folds defaults and rejects malformed input") {
  const ExperimentConfig cfg = ExperimentConfig::parse_text(
      "# comment line\n"
      "recipe = dcurve   # trailing comment\n"
      "\n"
      "  N = 256\n");
  CHECK(cfg.recipe == "dcurve");
  CHECK(cfg.get_int("N") == 256);           // explicit value wins
  CHECK(cfg.get_double("sigma") == 2.0);    // default folded in
  CHECK(cfg.get_int("r") == 2);
  CHECK(cfg.get_double_list("speeds").size() == 9);
  CHECK(cfg.has("tol_exponent"));
  CHECK_FALSE(cfg.has("no_such_key"));
  // the recipe name lives in its own field, not the key-value map
  CHECK_THROWS_AS(cfg.get_string("recipe"), std::invalid_argument);

  CHECK_THROWS_AS(ExperimentConfig::parse_text("N = 512\n"),
                  std::invalid_argument);  // recipe missing
  CHECK_THROWS_AS(ExperimentConfig::parse_text("recipe = bogus\n"),
                  std::invalid_argument);
  CHECK_THROWS_AS(
      ExperimentConfig::parse_text("recipe = dcurve\ntypo_key = 1\n"),
      std::invalid_argument);
  CHECK_THROWS_AS(ExperimentConfig::parse_text("recipe = dcurve\nbad line\n"),
                  std::invalid_argument);
  CHECK_THROWS_AS(ExperimentConfig::parse_text("recipe = dcurve\nN =\n"),
                  std::invalid_argument);

  const ExperimentConfig nums = ExperimentConfig::parse_text(
      "recipe = dcurve\nN = 512\nsigma = 1.5\nspeeds = 1, 2, 3\n");
  CHECK(nums.get_double("sigma") == 1.5);
  CHECK_THROWS_AS(nums.get_double("tol_nope"), std::invalid_argument);
  CHECK_THROWS_AS(nums.get_int("sigma"), std::invalid_argument);
  const std::vector<double> s = nums.get_double_list("speeds");
  REQUIRE(s.size() == 3);
  CHECK(s[1] == 2.0);

  CHECK_THROWS_AS(
      ExperimentConfig::parse_text("recipe = dcurve\nspeeds = 1,zap\n")
          .get_double_list("speeds"),
      std::invalid_argument);

  const auto path = fresh_dir("fkdv_cfg") / "run.txt";
  atomic_write_text(path, "recipe = decay_fits\nr = 3\n");
  const ExperimentConfig from_file = ExperimentConfig::parse_file(path);
  CHECK(from_file.recipe == "decay_fits");
  CHECK(from_file.get_int("r") == 3);
  CHECK_THROWS_AS(ExperimentConfig::parse_file(path.parent_path() / "nope"),
                  std::invalid_argument);
}

TEST_CASE("config hash is canonical over key order and tracks content") {
  const ExperimentConfig a =
      ExperimentConfig::parse_text("recipe = dcurve\nN = 256\nr = 3\n");
  const ExperimentConfig b =
      ExperimentConfig::parse_text("recipe = dcurve\nr = 3\nN = 256\n");
  CHECK(a.hash() == b.hash());

  const ExperimentConfig c =
      ExperimentConfig::parse_text("recipe = dcurve\nN = 256\nr = 2\n");
  CHECK(a.hash() != c.hash());

  // explicitly restating a default leaves the folded config unchanged
  const ExperimentConfig d = ExperimentConfig::parse_text("recipe = dcurve\n");
  const ExperimentConfig e =
      ExperimentConfig::parse_text("recipe = dcurve\nsigma = 2\n");
  CHECK(d.hash() == e.hash());

  // independent reimplementation over the canonical text
  std::string canon = "recipe=" + d.recipe + "\n";
  for (const auto& [k, v] : d.kv) canon += k + "=" + v + "\n";
  CHECK(d.hash() == fnv1a(canon));
}

TEST_CASE("run manifest serializes checks and pass state") {
  RunManifest m;
  m.recipe = "dcurve";
  m.config_hash = "00ff00ff00ff00ff";
  m.version = "0.1.0";
  m.seed = 7;
  m.wall_seconds = 1.25;
  m.checks.push_back({"alpha", true, 1.0, 2.0, "fine"});
  m.outputs.push_back("dcurve.csv");
  CHECK(m.all_pass());

  const nlohmann::json j = nlohmann::json::parse(m.to_json());
  CHECK(j["recipe"] == "dcurve");
  CHECK(j["config_hash"] == "00ff00ff00ff00ff");
  CHECK(j["seed"] == 7);
  CHECK(j["all_pass"] == true);
  REQUIRE(j["checks"].size() == 1);
  CHECK(j["checks"][0]["name"] == "alpha");
  CHECK(j["checks"][0]["threshold"] == 2.0);
  CHECK(j["outputs"][0] == "dcurve.csv");

  m.checks.push_back({"beta", false, 9.0, 1.0, ""});
  CHECK_FALSE(m.all_pass());
  CHECK(nlohmann::json::parse(m.to_json())["all_pass"] == false);
}

TEST_CASE("existence table solves exactly the solvable parity cells") {
  const auto out = fresh_dir("fkdv_existence");
  const ExperimentConfig cfg =
      ExperimentConfig::parse_text("recipe = existence_table\n");
  const RunManifest m = run_recipe(cfg, out);
  CHECK(m.all_pass());
  REQUIRE(m.checks.size() == 9);

  int solved = 0, refused = 0;
  for (const auto& c : m.checks) {
    if (c.name.rfind("cell_", 0) != 0) continue;
    if (c.note.find(", solved") != std::string::npos) ++solved;
    if (c.note.find(", refused") != std::string::npos) ++refused;
  }
  CHECK(solved == 5);
  CHECK(refused == 3);

  const auto dir = out / ("existence_table-" + m.config_hash.substr(0, 8));
  const auto rows = csv_rows(dir / "existence_table.csv");
  REQUIRE(rows.size() == 8);
  for (const auto& row : rows) {
    REQUIRE(row.size() == 9);
    const bool solvable = row[3] != "no-ground-state";
    CHECK(row[5] == (solvable ? "yes" : "no"));
    if (solvable) CHECK(row[4] == row[6]);  // expected vs obtained sign
  }

  // solved states round-trip through the profile format
  const Profile negative_state = load_profile(dir / "state_a-1_p2_q3.txt");
  CHECK(negative_state.grid.n == 512);
  double lo = 0.0;
  for (double v : negative_state.values) lo = std::min(lo, v);
  CHECK(lo < -0.1);  // the negative-sign cell really is negative
}

TEST_CASE("speed-limit recipes approach their single-power limiters") {
  for (const std::string name :
       {"small_speed_limit", "large_speed_limit", "large_speed_limit_negative"}) {
    const auto out = fresh_dir("fkdv_" + name);
    const ExperimentConfig cfg =
        ExperimentConfig::parse_text("recipe = " + name + "\n");
    const RunManifest m = run_recipe(cfg, out);
    CHECK(m.all_pass());

    const auto dir = out / (name + "-" + m.config_hash.substr(0, 8));
    const auto rows = csv_rows(dir / "speed_limit.csv");
    REQUIRE(rows.size() == 4);
    double prev = 1e300;
    for (const auto& row : rows) {
      REQUIRE(row.size() == 4);
      const double hgap = std::stod(row[1]);
      CHECK(hgap < prev);  // ordered toward the limit in the table as well
      prev = hgap;
    }
    CHECK(std::filesystem::exists(dir / "hgap_vs_speed.dat"));
    CHECK(std::filesystem::exists(dir / "manifest.json"));
  }
}

TEST_CASE("dcurve recipe reproduces the closed-form action curve") {
  const auto out = fresh_dir("fkdv_dcurve");
  const ExperimentConfig cfg = ExperimentConfig::parse_text("recipe = dcurve\n");
  const RunManifest m = run_recipe(cfg, out);
  CHECK(m.all_pass());

  const auto dir = out / ("dcurve-" + m.config_hash.substr(0, 8));
  const std::string raw = slurp(dir / "dcurve.csv");
  CHECK(raw.find("c,d,d2,C1,negative_count,kernel_alignment\n") !=
        std::string::npos);

  const auto rows = csv_rows(dir / "dcurve.csv");
  REQUIRE(rows.size() == 9);
  for (size_t i = 0; i < rows.size(); ++i) {
    REQUIRE(rows[i].size() == 6);
    const double c = std::stod(rows[i][0]);
    const double d = std::stod(rows[i][1]);
    // closed form at sigma = 2, quadratic power: d(c) = 1.2 c^{5/2}
    CHECK(std::abs(d - 1.2 * std::pow(c, 2.5)) <= 1e-6 * d);
    if (i == 0 || i + 1 == rows.size()) {
      CHECK(std::isnan(std::stod(rows[i][2])));
    } else {
      const double d2 = std::stod(rows[i][2]);
      CHECK(std::abs(d2 - 4.5 * std::sqrt(c)) <= 2e-2 * d2);
    }
    CHECK(std::stod(rows[i][3]) > 0.25);  // coercivity constant
    CHECK(rows[i][4] == "1");
  }

  // the second-derivative curve skips the undefined endpoints
  int dat_rows = 0;
  std::stringstream ss(slurp(dir / "d2_vs_speed.dat"));
  std::string line;
  while (std::getline(ss, line))
    if (!line.empty() && line[0] != '#') ++dat_rows;
  CHECK(dat_rows == 7);
}

TEST_CASE("stability matrix honors its expectation label") {
  const auto out = fresh_dir("fkdv_stab");
  const ExperimentConfig stable = ExperimentConfig::parse_text(
      "recipe = stability_matrix\nkinds = rescale\nhorizon = 5\n");
  const RunManifest ms = run_recipe(stable, out);
  CHECK(ms.all_pass());
  const auto dir = out / ("stability_matrix-" + ms.config_hash.substr(0, 8));
  const auto rows = csv_rows(dir / "stability_matrix.csv");
  REQUIRE(rows.size() == 3);  // one row per default perturbation size
  for (const auto& row : rows) {
    CHECK(row[0] == "rescale");
    CHECK(row[5] == "no");  // not halted
  }
  int trace_rows = 0;
  std::stringstream ss(slurp(dir / "trace_rescale_2.dat"));
  std::string line;
  while (std::getline(ss, line))
    if (!line.empty() && line[0] != '#') ++trace_rows;
  CHECK(trace_rows >= 2);
  bool labeled = false;
  for (const auto& c : ms.checks)
    labeled = labeled || c.note.find("artifact-level") != std::string::npos;
  CHECK(labeled);

  // a cell with both powers supercritical leaves the orbit immediately
  const ExperimentConfig unstable = ExperimentConfig::parse_text(
      "recipe = stability_matrix\na = 1\np = 6\nq = 7\n"
      "expect = unstable\nkinds = rescale\nhorizon = 6\n");
  CHECK(run_recipe(unstable, out).all_pass());

  // the same judge applied to the stable orbit must say no
  const ExperimentConfig mislabeled = ExperimentConfig::parse_text(
      "recipe = stability_matrix\nkinds = rescale\nhorizon = 5\n"
      "expect = unstable\n");
  CHECK_FALSE(run_recipe(mislabeled, out).all_pass());

  CHECK_THROWS_AS(
      run_recipe(ExperimentConfig::parse_text(
                     "recipe = stability_matrix\nexpect = maybe\n"),
                 out),
      std::invalid_argument);
}

TEST_CASE("decay-fit recipe matches the dispersion-determined tail rates") {
  const auto out = fresh_dir("fkdv_decay");
  const ExperimentConfig cfg =
      ExperimentConfig::parse_text("recipe = decay_fits\n");
  const RunManifest m = run_recipe(cfg, out);
  CHECK(m.all_pass());

  const auto dir = out / ("decay_fits-" + m.config_hash.substr(0, 8));
  const auto rows = csv_rows(dir / "decay_fits.csv");
  REQUIRE(rows.size() == 2);
  for (const auto& row : rows) {
    const double sigma = std::stod(row[0]);
    const double exponent = std::stod(row[4]);
    const double expected = std::stod(row[5]);
    CHECK(expected == sigma + 1.0);
    CHECK(std::abs(exponent - expected) <= 0.2);
    CHECK(std::stod(row[7]) >= 0.995);  // r^2
  }
  CHECK(std::filesystem::exists(dir / "tail_sigma1.dat"));
  CHECK(std::filesystem::exists(dir / "tail_sigma1.5.dat"));

  // the exponential-tail regime is out of scope and says so
  CHECK_THROWS_AS(
      run_recipe(
          ExperimentConfig::parse_text("recipe = decay_fits\nsigmas = 2\n"),
          out),
      std::invalid_argument);
}

TEST_CASE("identical configs reproduce identical artifacts") {
  const auto out_a = fresh_dir("fkdv_repro_a");
  const auto out_b = fresh_dir("fkdv_repro_b");
  const std::string text = "recipe = small_speed_limit\n";
  const RunManifest ma = run_recipe(ExperimentConfig::parse_text(text), out_a);
  const RunManifest mb = run_recipe(ExperimentConfig::parse_text(text), out_b);
  CHECK(ma.config_hash == mb.config_hash);

  const auto dir_a = out_a / ("small_speed_limit-" + ma.config_hash.substr(0, 8));
  const auto dir_b = out_b / ("small_speed_limit-" + mb.config_hash.substr(0, 8));
  CHECK(slurp(dir_a / "speed_limit.csv") == slurp(dir_b / "speed_limit.csv"));
  CHECK(slurp(dir_a / "hgap_vs_speed.dat") ==
        slurp(dir_b / "hgap_vs_speed.dat"));

  // manifests agree on everything except the wall clock
  nlohmann::json ja = nlohmann::json::parse(ma.to_json());
  nlohmann::json jb = nlohmann::json::parse(mb.to_json());
  ja.erase("wall_seconds");
  jb.erase("wall_seconds");
  CHECK(ja == jb);
}

TEST_CASE("artifacts carry the config hash and are fully listed") {
  const auto out = fresh_dir("fkdv_header");
  const ExperimentConfig cfg =
      ExperimentConfig::parse_text("recipe = coercivity_sweep\n");
  const RunManifest m = run_recipe(cfg, out);
  CHECK(m.all_pass());

  const auto dir = out / ("coercivity_sweep-" + m.config_hash.substr(0, 8));
  const std::string expected_header = "# config_hash=" + m.config_hash;
  std::set<std::string> on_disk;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    on_disk.insert(entry.path().filename().string());
  std::set<std::string> listed(m.outputs.begin(), m.outputs.end());
  listed.insert("manifest.json");
  CHECK(on_disk == listed);

  for (const std::string& name : m.outputs) {
    if (name.find(".csv") == std::string::npos &&
        name.find(".dat") == std::string::npos)
      continue;
    const std::string content = slurp(dir / name);
    CHECK(content.rfind(expected_header, 0) == 0);
  }
}

TEST_CASE("recipe registry names and documents every recipe") {
  const std::vector<std::string> names = recipe_names();
  REQUIRE(names.size() == 8);
  CHECK(names.front() == "existence_table");
  for (const std::string& n : names) {
    const std::string help = recipe_help(n);
    CHECK(help.find(n) == 0);
    CHECK(help.find("keys:") != std::string::npos);
    CHECK(help.find("seed") != std::string::npos);
  }
  CHECK_THROWS_AS(recipe_help("bogus"), std::invalid_argument);
}

TEST_CASE("admissible tuples annotate existence and the stability window") {
  const std::vector<TupleRow> rows = admissible_tuples(2.0);
  CHECK(rows.size() == 56);  // two signs, 28 pairs with 2 <= p < q <= 9

  auto find = [&](int a, int p, int q) -> const TupleRow& {
    for (const TupleRow& r : rows)
      if (r.a == a && r.p == p && r.q == q) return r;
    REQUIRE(false);
    return rows.front();
  };

  const TupleRow& focusing = find(+1, 2, 3);
  CHECK(focusing.parity == ParityCase::PositiveFocusing);
  CHECK(focusing.sign == 1);
  CHECK(focusing.stability_known);
  CHECK_FALSE(focusing.window.empty());

  const TupleRow& competing = find(-1, 3, 4);
  CHECK(competing.parity == ParityCase::PositiveCompeting);
  CHECK(competing.sign == 1);
  CHECK(competing.stability_known);  // q = 4 < 2 sigma + 1 = 5

  const TupleRow& negative = find(-1, 2, 3);
  CHECK(negative.parity == ParityCase::NegativeCompeting);
  CHECK(negative.sign == -1);

  const TupleRow& excluded = find(+1, 2, 4);
  CHECK(excluded.parity == ParityCase::NoGroundState);
  CHECK(excluded.sign == 0);
  CHECK_FALSE(excluded.stability_known);

  // at sigma = 1 the tightest window hypothesis q < 3 excludes (2, 3)
  const std::vector<TupleRow> shallow = admissible_tuples(1.0);
  for (const TupleRow& r : shallow)
    if (r.a == -1 && r.p == 2 && r.q == 3) CHECK_FALSE(r.stability_known);

  // between orders, competing cells with odd low power need q < 2 sigma + 1,
  // but the smallest admissible odd p forces q past it
  for (const TupleRow& r : admissible_tuples(1.5))
    if (r.parity == ParityCase::PositiveCompeting)
      CHECK_FALSE(r.stability_known);

  CHECK_THROWS_AS(admissible_tuples(2.0, 2), std::invalid_argument);
}
