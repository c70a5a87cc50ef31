#pragma once

namespace ktl {

inline constexpr const char* kToolName = "ktl";
inline constexpr const char* kVersion = "0.1.0";

}  // namespace ktl
