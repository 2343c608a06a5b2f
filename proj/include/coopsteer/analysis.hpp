#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "coopsteer/bfi.hpp"
#include "coopsteer/config.hpp"
#include "coopsteer/game.hpp"
#include "coopsteer/runner.hpp"

namespace coopsteer {

class EmptyGroup : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MissingPair : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Agent Cooperate actions / agent actions, pooled over every round.
// Throws EmptyGroup on no records, std::invalid_argument on mixed round counts.
double cooperation_rate(std::span<const MatchRecord> records);

// Mean cumulative payoff over the records.
double average_cumulative_payoff(std::span<const MatchRecord> records);

// Mean cumulative payoff / (rounds * T), the theoretical per-match maximum.
double normalized_payoff(std::span<const MatchRecord> records, const PayoffMatrix& m, int rounds);

inline constexpr const char* kNormalizationRule = "mean cumulative payoff / (rounds * T)";

struct GroupKey {
  std::string model;
  Experiment experiment = Experiment::E2_baseline;
  std::optional<Manipulation> manipulation;
  std::optional<StrategyKind> opponent;

  static GroupKey of(const ExperimentCondition& c);
  friend bool operator==(const GroupKey&, const GroupKey&) = default;
  friend bool operator<(const GroupKey& a, const GroupKey& b);
};

struct SummaryStats {
  GroupKey key;
  double avg_cooperation_rate = 0.0;
  double avg_cumulative_payoff = 0.0;
  double normalized_payoff = 0.0;
  int n_matches = 0;
  int rounds = 0;
};

/// One group per match condition, sorted by key. Each record lands in the
/// group of its condition. Throws EmptyGroup naming every condition without
/// records unless `allow_partial`, in which case those groups are left out.
std::vector<SummaryStats> summarize(const RunManifest& manifest, std::span<const MatchRecord> records,
                                    bool allow_partial = false);

struct DiffEntry {
  std::string model;
  Trait trait = Trait::Agreeableness;
  StrategyKind opponent = StrategyKind::AllC;
  double delta_cooperation = 0.0;
  double delta_payoff = 0.0;
  double delta_normalized_payoff = 0.0;
  const SummaryStats* high = nullptr;  // value 5
  const SummaryStats* low = nullptr;   // value 1
};

// a - b, field by field.
DiffEntry difference(const SummaryStats& a, const SummaryStats& b);

/// value-5 minus value-1 per (model, trait, opponent) over the manipulated
/// groups in `stats` (which must outlive the result). Throws MissingPair
/// listing every half-present pair, or when no manipulated group exists.
std::vector<DiffEntry> diff_table(std::span<const SummaryStats> stats);

void write_summary_csv(std::ostream& out, std::span<const SummaryStats> stats);
void write_diff_csv(std::ostream& out, std::span<const DiffEntry> diffs);

struct RadarSeries {
  std::string label;
  std::array<double, 5> values{};  // O C E A N
  std::optional<std::array<double, 5>> sd;
};

TraitStats human_reference();

/// One series per model plus the human series last, axes O C E A N.
/// Throws std::invalid_argument without any model.
nlohmann::json export_radar(std::span<const std::pair<std::string, TraitStats>> models,
                            const TraitStats& human = human_reference());

// Static SVG of the series in a radar JSON document, scaled 1 (centre) to 5.
std::string render_radar_svg(const nlohmann::json& radar);

// Per-model stats from E1 records, sorted by model name.
std::vector<std::pair<std::string, TraitStats>> bfi_stats_by_model(std::span<const BfiRunRecord> runs);

}  // namespace coopsteer
