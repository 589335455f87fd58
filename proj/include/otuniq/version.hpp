#pragma once

namespace otuniq {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace otuniq
