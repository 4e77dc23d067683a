#pragma once

namespace fossil {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace fossil
