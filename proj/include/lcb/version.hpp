#pragma once

namespace lcb {
inline constexpr const char* kVersion = "0.1.0";
}
