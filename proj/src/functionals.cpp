#include "hypoflow/functionals.hpp"

#include <charconv>

namespace hypoflow {

std::string PIndex::label() const {
  if (boltzmann) return "boltzmann";
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, p);
  return std::string(buf, res.ptr);
}

namespace {
constexpr std::array<std::string_view, kAllFunctionals.size()> kNames = {
    "H",     "H_pi",  "I_X",          "I_V",          "I_M",  "I_piX", "I_piX_over_X", "I_piV_over_V", "D",
    "I_XF",  "I_VF",  "I_Vpi",        "U_divergence_pairing", "I_VX", "I_VV",  "I_2XV",        "I_2V",
};
}  // namespace

std::string_view to_string(FunctionalName name) { return kNames[static_cast<std::size_t>(name)]; }

std::optional<FunctionalName> functional_from_string(std::string_view name) {
  for (std::size_t i = 0; i < kNames.size(); ++i) {
    if (kNames[i] == name) return kAllFunctionals[i];
  }
  return std::nullopt;
}

double FunctionalReport::at(FunctionalName name) const {
  const auto v = get(name);
  if (!v) throw ConfigError("functional " + std::string(to_string(name)) + " is not defined for this report");
  return *v;
}

}  // namespace hypoflow
