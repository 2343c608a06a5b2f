#include "coopsteer/strategy.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace coopsteer {

std::string_view strategy_name(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::AllC: return "ALLC";
    case StrategyKind::AllD: return "ALLD";
    case StrategyKind::Random: return "RANDOM";
    case StrategyKind::TitForTat: return "TFT";
    case StrategyKind::GrimTrigger: return "GRIM";
  }
  throw std::logic_error("unknown strategy kind");
}

StrategyKind strategy_from_name(std::string_view name) {
  for (auto kind : kAllStrategies) {
    if (strategy_name(kind) == name) return kind;
  }
  throw std::invalid_argument("unknown strategy: " + std::string(name));
}

Action RandomStrategy::next_action(std::span<const HistoryEntry>) {
  return (engine_() >> 63) == 0 ? Action::Cooperate : Action::Defect;
}

Action TitForTat::next_action(std::span<const HistoryEntry> history) {
  if (history.empty()) return Action::Cooperate;
  return history.back().opponent;
}

Action GrimTrigger::next_action(std::span<const HistoryEntry> history) {
  if (!triggered_) {
    triggered_ = std::any_of(history.begin(), history.end(), [](const HistoryEntry& e) {
      return e.opponent == Action::Defect;
    });
  }
  return triggered_ ? Action::Defect : Action::Cooperate;
}

std::unique_ptr<Strategy> make_strategy(StrategyKind kind, std::uint64_t seed) {
  std::unique_ptr<Strategy> s;
  switch (kind) {
    case StrategyKind::AllC: s = std::make_unique<AlwaysCooperate>(); break;
    case StrategyKind::AllD: s = std::make_unique<AlwaysDefect>(); break;
    case StrategyKind::Random: s = std::make_unique<RandomStrategy>(); break;
    case StrategyKind::TitForTat: s = std::make_unique<TitForTat>(); break;
    case StrategyKind::GrimTrigger: s = std::make_unique<GrimTrigger>(); break;
  }
  s->reset(seed);
  return s;
}

}  // namespace coopsteer
