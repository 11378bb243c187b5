#pragma once

namespace curvop {
inline constexpr const char* kVersion = "0.1.0";
}
