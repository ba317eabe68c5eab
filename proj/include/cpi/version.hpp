#pragma once

namespace cpi {

inline constexpr const char* version = "0.1.0";

}  // namespace cpi
