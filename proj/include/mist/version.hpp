#pragma once

namespace mist {
inline constexpr const char* version = "0.1.0";
}
