#pragma once

#include <cstddef>
#include <string>
#include <string_view>

namespace edgetsn {

enum class Modality { rgb, flow };

std::string_view to_string(Modality m) noexcept;
Modality parse_modality(std::string_view s);

constexpr std::size_t modality_channels(Modality m) noexcept { return m == Modality::rgb ? 3 : 2; }

}  // namespace edgetsn
