#pragma once

namespace fkdv {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace fkdv
