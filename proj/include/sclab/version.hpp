#pragma once

namespace sclab {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace sclab
