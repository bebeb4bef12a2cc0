#pragma once

namespace sgrl {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace sgrl
