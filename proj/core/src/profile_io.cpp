#include "fkdv/profile_io.hpp"

#include "fkdv/spectral.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace fkdv {

void atomic_write_text(const std::filesystem::path& path,
                       const std::string& content) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string());
    out << content;
    if (!out.flush())
      throw std::runtime_error("short write to " + tmp.string());
  }
  fs::rename(tmp, path);
}

void save_profile(const std::filesystem::path& path, const Profile& v) {
  std::ostringstream out;
  nlohmann::json header = {{"L", v.grid.half_length}, {"N", v.grid.n}};
  out << "# " << header.dump() << "\n";
  char line[80];
  for (int i = 0; i < v.grid.n; ++i) {
    std::snprintf(line, sizeof line, "%.17g %.17g\n", v.grid.x(i),
                  v.values[i]);
    out << line;
  }
  atomic_write_text(path, out.str());
}

Profile load_profile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string header;
  if (!std::getline(in, header) || header.rfind("# ", 0) != 0)
    throw std::runtime_error(path.string() +
                             ": missing '# {...}' header line");
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(header.substr(2));
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error(path.string() + ": bad header JSON: " + e.what());
  }
  if (!meta.contains("L") || !meta.contains("N"))
    throw std::runtime_error(path.string() + ": header must carry L and N");
  Grid grid(meta["L"].get<double>(), meta["N"].get<int>());
  Profile v(grid);
  for (int i = 0; i < grid.n; ++i) {
    double x = 0.0, val = 0.0;
    if (!(in >> x >> val))
      throw std::runtime_error(path.string() + ": truncated at row " +
                               std::to_string(i) + " of " +
                               std::to_string(grid.n));
    v.values[i] = val;
  }
  if (!all_finite(v))
    throw std::runtime_error(path.string() + ": non-finite values");
  return v;
}

}  // namespace fkdv
