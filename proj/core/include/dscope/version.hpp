#pragma once

namespace dscope {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace dscope
