#pragma once

namespace cfid {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace cfid
