#pragma once

namespace vpmix {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace vpmix
