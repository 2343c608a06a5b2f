#include "coopsteer/traits.hpp"

#include <stdexcept>
#include <string>

#include <fmt/format.h>

namespace coopsteer {

std::string_view trait_name(Trait t) {
  switch (t) {
    case Trait::Openness: return "Openness";
    case Trait::Conscientiousness: return "Conscientiousness";
    case Trait::Extraversion: return "Extraversion";
    case Trait::Agreeableness: return "Agreeableness";
    case Trait::Neuroticism: return "Neuroticism";
  }
  throw std::logic_error("unknown trait");
}

std::string_view trait_letter(Trait t) { return trait_name(t).substr(0, 1); }

Trait trait_from_string(std::string_view text) {
  for (auto t : kTraitOrder) {
    if (text == trait_letter(t) || text == trait_name(t)) return t;
  }
  throw std::invalid_argument("unknown trait: " + std::string(text));
}

void TraitScores::validate() const {
  for (auto t : kTraitOrder) {
    const double v = (*this)[t];
    if (!(v >= 1.0 && v <= 5.0)) {
      throw std::out_of_range(fmt::format("{} score {} outside [1, 5]", trait_name(t), v));
    }
  }
}

nlohmann::json to_json(const TraitScores& scores) {
  nlohmann::json j = nlohmann::json::object();
  for (auto t : kTraitOrder) j[std::string(trait_letter(t))] = scores[t];
  return j;
}

TraitScores trait_scores_from_json(const nlohmann::json& j) {
  TraitScores s;
  for (auto t : kTraitOrder) s[t] = j.at(std::string(trait_letter(t))).get<double>();
  s.validate();
  return s;
}

}  // namespace coopsteer
