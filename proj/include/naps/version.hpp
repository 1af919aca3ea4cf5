#pragma once

#include <string_view>

namespace naps {

inline constexpr std::string_view kVersion = "1.0.0";

// Identifier of the pseudo-random scheme used everywhere in this library.
// Recorded in output metadata so archived results stay attributable even if
// a future version changes the generator.
inline constexpr std::string_view kRngSchemeId = "splitmix64-counter-v1";

}  // namespace naps
