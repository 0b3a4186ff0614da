#pragma once

namespace mcpbandit {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace mcpbandit
