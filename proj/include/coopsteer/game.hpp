#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "coopsteer/action.hpp"
#include "coopsteer/strategy.hpp"

namespace coopsteer {

/// Integer (T, R, P, S) payoffs. Construction enforces T > R > P > S.
class PayoffMatrix {
 public:
  PayoffMatrix() = default;
  PayoffMatrix(int temptation, int reward, int punishment, int sucker);

  int temptation() const { return t_; }
  int reward() const { return r_; }
  int punishment() const { return p_; }
  int sucker() const { return s_; }

  friend bool operator==(const PayoffMatrix&, const PayoffMatrix&) = default;

 private:
  int t_ = 5;
  int r_ = 3;
  int p_ = 1;
  int s_ = 0;
};

// (points for a, points for b). Total over valid matrices.
std::pair<int, int> resolve_round(Action a, Action b, const PayoffMatrix& m);

struct RoundOutcome {
  int round_index = 0;  // 1-based
  Action self_action = Action::Cooperate;
  Action opponent_action = Action::Cooperate;
  int self_payoff = 0;
  int opponent_payoff = 0;

  friend bool operator==(const RoundOutcome&, const RoundOutcome&) = default;
};

/// The agent backend gave up (retries exhausted). The match is abandoned.
class AgentFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// What the agent side produced for one round.
struct AgentMove {
  Action action = Action::Cooperate;
  std::string prompt;     // full text shown to the agent, empty for non-text agents
  std::string raw_reply;  // final reply the action was parsed from
  int attempts = 1;
};

/// The agent seat of a match. `completed` holds only finished rounds from
/// the agent's perspective; the current round's opponent move is never
/// visible.
class MatchAgent {
 public:
  virtual ~MatchAgent() = default;
  virtual void begin_match(std::uint64_t seed) = 0;
  virtual AgentMove decide(std::span<const RoundOutcome> completed, int round_index) = 0;
};

struct MatchRecord {
  std::string match_id;
  std::string condition_id;
  int trial = 0;
  PayoffMatrix matrix;
  std::string system_prompt;  // constant across rounds; empty for non-text agents
  std::vector<RoundOutcome> rounds;
  std::vector<std::string> prompts;
  std::vector<std::string> raw_replies;
  std::vector<int> attempts;
  std::uint64_t rng_seed = 0;
  std::string started_at;
  std::string finished_at;
};

inline constexpr int kTranscriptSchemaVersion = 1;

nlohmann::json to_json(const MatchRecord& record);
// Throws std::invalid_argument on schema mismatch or inconsistent payoffs.
MatchRecord match_record_from_json(const nlohmann::json& j);

int cumulative_payoff(const MatchRecord& record);
int opponent_cumulative_payoff(const MatchRecord& record);

struct MatchSettings {
  int rounds = 10;
  PayoffMatrix matrix;
  std::uint64_t seed = 0;
  std::string match_id;
  std::string condition_id;
  int trial = 0;
  // Wall-clock stamp source; defaults to UTC ISO-8601 now.
  std::function<std::string()> clock;
};

/// Plays one fresh match. Both sides choose from completed history only.
/// Throws std::invalid_argument when rounds < 1 and lets AgentFailure
/// propagate to the caller.
MatchRecord run_match(MatchAgent& agent, Strategy& opponent, const MatchSettings& settings);

std::string utc_timestamp_now();

}  // namespace coopsteer
