#pragma once

namespace evtmargin {

inline constexpr const char* library_name = "evtmargin";
inline constexpr const char* library_version = "0.1.0";

}  // namespace evtmargin
