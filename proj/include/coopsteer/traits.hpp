#pragma once

#include <array>
#include <cstddef>
#include <string_view>

#include "json.hpp"

namespace coopsteer {

// Storage and CSV order is O, C, E, A, N.
enum class Trait : std::uint8_t { Openness, Conscientiousness, Extraversion, Agreeableness, Neuroticism };

inline constexpr std::array<Trait, 5> kTraitOrder = {
    Trait::Openness, Trait::Conscientiousness, Trait::Extraversion, Trait::Agreeableness,
    Trait::Neuroticism};

constexpr std::size_t index_of(Trait t) { return static_cast<std::size_t>(t); }

std::string_view trait_name(Trait t);    // "Openness"
std::string_view trait_letter(Trait t);  // "O"
// Accepts either the letter or the full name.
Trait trait_from_string(std::string_view text);

/// Five dimension scores on the 1-5 scale.
struct TraitScores {
  std::array<double, 5> values{3.0, 3.0, 3.0, 3.0, 3.0};

  double& operator[](Trait t) { return values[index_of(t)]; }
  double operator[](Trait t) const { return values[index_of(t)]; }

  // Throws std::out_of_range if any score is outside [1, 5].
  void validate() const;

  static TraitScores uniform(double v) { return TraitScores{{v, v, v, v, v}}; }
  friend bool operator==(const TraitScores&, const TraitScores&) = default;
};

// {"O": .., "C": .., "E": .., "A": .., "N": ..}
nlohmann::json to_json(const TraitScores& scores);
TraitScores trait_scores_from_json(const nlohmann::json& j);

}  // namespace coopsteer
