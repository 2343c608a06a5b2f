#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <string_view>

#include "coopsteer/action.hpp"

namespace coopsteer {

enum class StrategyKind : std::uint8_t { AllC, AllD, Random, TitForTat, GrimTrigger };

inline constexpr std::array<StrategyKind, 5> kAllStrategies = {
    StrategyKind::AllC, StrategyKind::AllD, StrategyKind::Random,
    StrategyKind::TitForTat, StrategyKind::GrimTrigger};

// "ALLC", "ALLD", "RANDOM", "TFT", "GRIM".
std::string_view strategy_name(StrategyKind kind);
StrategyKind strategy_from_name(std::string_view name);

/// A fixed opponent. `history` is the opponent's own perspective: `own` is
/// what the strategy played, `opponent` is what the agent played. It only
/// ever contains completed rounds.
class Strategy {
 public:
  virtual ~Strategy() = default;

  virtual StrategyKind kind() const = 0;
  std::string_view name() const { return strategy_name(kind()); }

  // Clears all match state. RANDOM reseeds its stream from `seed`.
  virtual void reset(std::uint64_t seed) = 0;

  virtual Action next_action(std::span<const HistoryEntry> history) = 0;
};

class AlwaysCooperate final : public Strategy {
 public:
  StrategyKind kind() const override { return StrategyKind::AllC; }
  void reset(std::uint64_t) override {}
  Action next_action(std::span<const HistoryEntry>) override { return Action::Cooperate; }
};

class AlwaysDefect final : public Strategy {
 public:
  StrategyKind kind() const override { return StrategyKind::AllD; }
  void reset(std::uint64_t) override {}
  Action next_action(std::span<const HistoryEntry>) override { return Action::Defect; }
};

// Fair coin: Cooperate iff the top bit of the next mt19937_64 draw is 0.
class RandomStrategy final : public Strategy {
 public:
  explicit RandomStrategy(std::uint64_t seed = 0) : engine_(seed) {}
  StrategyKind kind() const override { return StrategyKind::Random; }
  void reset(std::uint64_t seed) override { engine_.seed(seed); }
  Action next_action(std::span<const HistoryEntry> history) override;

 private:
  std::mt19937_64 engine_;
};

class TitForTat final : public Strategy {
 public:
  StrategyKind kind() const override { return StrategyKind::TitForTat; }
  void reset(std::uint64_t) override {}
  Action next_action(std::span<const HistoryEntry> history) override;
};

class GrimTrigger final : public Strategy {
 public:
  StrategyKind kind() const override { return StrategyKind::GrimTrigger; }
  void reset(std::uint64_t) override { triggered_ = false; }
  Action next_action(std::span<const HistoryEntry> history) override;
  bool triggered() const { return triggered_; }

 private:
  bool triggered_ = false;
};

std::unique_ptr<Strategy> make_strategy(StrategyKind kind, std::uint64_t seed = 0);

}  // namespace coopsteer
