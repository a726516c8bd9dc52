#include "edgetsn/modality.hpp"

#include "edgetsn/error.hpp"

namespace edgetsn {

std::string_view to_string(Modality m) noexcept { return m == Modality::rgb ? "rgb" : "flow"; }

Modality parse_modality(std::string_view s) {
  if (s == "rgb") {
    return Modality::rgb;
  }
  if (s == "flow") {
    return Modality::flow;
  }
  throw ContractError("unknown modality '" + std::string(s) + "'");
}

}  // namespace edgetsn
