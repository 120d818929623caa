#pragma once

namespace bloom {

inline constexpr const char* version = "0.1.0";

}  // namespace bloom
