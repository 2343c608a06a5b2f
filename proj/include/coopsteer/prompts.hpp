#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "coopsteer/game.hpp"
#include "coopsteer/traits.hpp"

namespace coopsteer {

/// Template texts loaded from a directory (default: <data_dir>/templates).
struct PromptTemplates {
  std::string bfi_questionnaire;
  std::string game_context;
  std::string history_first_round;
  std::string history;
  std::string history_round;
  std::string personality_profile;
  std::string elicitation_suffix;
  std::string format_reminder;
  std::array<double, 5> bucket_lower_bounds{};
  // Indexed by Trait, then bucket.
  std::array<std::array<std::string, 5>, 5> descriptions;

  static PromptTemplates load(const std::filesystem::path& dir);
};

const PromptTemplates& default_templates();

/// Completed rounds from the agent's side plus the derived totals.
/// Totals are always recomputed from the round list.
class HistoryView {
 public:
  HistoryView() = default;
  // Throws std::invalid_argument unless rounds are numbered 1..n in order.
  explicit HistoryView(std::span<const RoundOutcome> rounds);

  std::span<const RoundOutcome> rounds() const { return rounds_; }
  bool empty() const { return rounds_.empty(); }
  int completed() const { return static_cast<int>(rounds_.size()); }
  int current_round() const { return completed() + 1; }

  int self_cooperations() const { return self_c_; }
  int self_defections() const { return completed() - self_c_; }
  int opponent_cooperations() const { return opp_c_; }
  int opponent_defections() const { return completed() - opp_c_; }
  int self_total() const { return self_total_; }
  int opponent_total() const { return opp_total_; }
  double opponent_defection_rate() const;

 private:
  std::vector<RoundOutcome> rounds_;
  int self_c_ = 0;
  int opp_c_ = 0;
  int self_total_ = 0;
  int opp_total_ = 0;
};

std::string render_game_context(int iterations, const PayoffMatrix& matrix,
                                 const PromptTemplates& t = default_templates());

std::string render_history(const HistoryView& history, const PromptTemplates& t = default_templates());

// Bucket index 0..4: half-open [lo, hi) with the top bucket closed at 5.0.
// Throws std::out_of_range outside [1, 5].
int bucket_index(double score, const PromptTemplates& t = default_templates());
const std::string& bucket_description(Trait trait, double score,
                                      const PromptTemplates& t = default_templates());

struct Manipulation {
  Trait trait;
  int value;  // 1 or 5

  friend bool operator==(const Manipulation&, const Manipulation&) = default;
};

struct PersonalityProfile {
  TraitScores scores;
  std::array<std::string, 5> descriptions;  // indexed by Trait
  std::optional<Manipulation> manipulation; // empty means measured

  static PersonalityProfile measured(const TraitScores& scores,
                                     const PromptTemplates& t = default_templates());
  // `base` with one trait replaced by `value` (1 or 5).
  static PersonalityProfile manipulated(const TraitScores& base, Manipulation m,
                                        const PromptTemplates& t = default_templates());
};

// Scores appear with one decimal, round-half-even.
std::string render_personality_prompt(const PersonalityProfile& profile,
                                      const PromptTemplates& t = default_templates());

}  // namespace coopsteer
