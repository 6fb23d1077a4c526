#pragma once

namespace metareg {

inline constexpr const char* kVersion = "1.0.0";

}  // namespace metareg
