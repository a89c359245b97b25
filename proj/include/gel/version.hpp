#pragma once

namespace gel {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace gel
