#pragma once

namespace tensorlim {
inline constexpr const char* kVersion = "0.1.0";
}
