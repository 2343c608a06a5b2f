#pragma once

#include <cstdint>
#include <string_view>

namespace coopsteer {

enum class Action : std::uint8_t { Cooperate, Defect };

// Serialized forms are exactly "Cooperate" and "Defect".
std::string_view to_string(Action action);

// Throws std::invalid_argument for anything but the two exact strings.
Action action_from_string(std::string_view text);

// One completed round seen from one player's side.
struct HistoryEntry {
  Action own;
  Action opponent;

  friend bool operator==(const HistoryEntry&, const HistoryEntry&) = default;
};

}  // namespace coopsteer
