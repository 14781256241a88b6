#pragma once

namespace perclab {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace perclab
