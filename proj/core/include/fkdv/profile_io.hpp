#pragma once

#include <filesystem>
#include <string>

#include "fkdv/grid.hpp"

namespace fkdv {

// Profile files are plain text: one JSON header line carrying the grid,
// then one "x value" row per collocation point with 17 significant
// digits (lossless double round-trip):
//
//   # {"L":30.0,"N":512}
//   -3.00000000000000000e+01 1.23456789012345675e-05
//   ...
//
// Writes are atomic (temp file + rename).
void save_profile(const std::filesystem::path& path, const Profile& v);
Profile load_profile(const std::filesystem::path& path);

// Atomic small-text-file writer used for all generated outputs.
void atomic_write_text(const std::filesystem::path& path,
                       const std::string& content);

}  // namespace fkdv
