#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "coopsteer/game.hpp"
#include "coopsteer/prompts.hpp"
#include "coopsteer/traits.hpp"

namespace coopsteer {

enum class Role : std::uint8_t { System, User, Assistant };
std::string_view role_name(Role role);

struct ChatMessage {
  Role role;
  std::string content;

  friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};
using Conversation = std::vector<ChatMessage>;

// Network-level failure (timeout, connection, non-2xx). Retried with backoff.
class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Replay mode has no recording for the requested key. Never retried.
class FixtureMissing : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Purpose : std::uint8_t { Questionnaire, Action };

/// Per-request metadata. Text agents ignore everything except the replay
/// key; the persona mock reads the structured profile and history instead
/// of the rendered text.
struct RequestContext {
  Purpose purpose = Purpose::Action;
  std::string replay_key;
  int attempt = 1;
  const TraitScores* profile = nullptr;  // null when no personality prompt is sent
  const HistoryView* history = nullptr;
};

/// One agent backend. `reset` starts a fresh conversation (and reseeds any
/// internal randomness); nothing carries over between resets.
class ChatAgent {
 public:
  virtual ~ChatAgent() = default;
  virtual std::string_view kind() const = 0;
  virtual void reset(std::uint64_t seed) { (void)seed; }
  // May throw TransportError or FixtureMissing.
  virtual std::string complete(const Conversation& conversation, const RequestContext& ctx) = 0;
};

/// Replies come from a fixed list, consumed in order across the whole
/// lifetime of the handle and wrapping around at the end. `reset` does not
/// rewind, so a two-entry list alternates between runs.
class ScriptedAgent final : public ChatAgent {
 public:
  explicit ScriptedAgent(std::vector<std::string> replies);
  std::string_view kind() const override { return "scripted"; }
  std::string complete(const Conversation& conversation, const RequestContext& ctx) override;
  std::size_t calls() const { return calls_; }

 private:
  std::vector<std::string> replies_;
  std::size_t next_ = 0;
  std::size_t calls_ = 0;
};

/// Serves recorded replies keyed by replay key; the n-th attempt for a key
/// gets the n-th recorded reply.
class ReplayAgent final : public ChatAgent {
 public:
  using Recordings = std::map<std::string, std::vector<std::string>>;

  explicit ReplayAgent(std::shared_ptr<const Recordings> recordings);
  std::string_view kind() const override { return "replay"; }
  std::string complete(const Conversation& conversation, const RequestContext& ctx) override;

  // JSONL lines of {"key": ..., "replies": [...]}.
  static std::shared_ptr<const Recordings> load(const std::filesystem::path& path);
  // Final replies from a transcript store, keyed "<condition>/t<trial>/r<round>".
  static std::shared_ptr<const Recordings> from_transcripts(const std::filesystem::path& path);

 private:
  std::shared_ptr<const Recordings> recordings_;
};

// p = clamp(0.05 + 0.9 * (A - 1) / 4 - 0.3 * opponent_defection_rate, 0, 1)
double persona_cooperation_probability(double agreeableness, const HistoryView& history);

// Cooperates iff unit_interval(rng()) < p.
Action parametric_persona_policy(const TraitScores& profile, const HistoryView& history,
                                 std::mt19937_64& rng);

/// Offline stand-in for a model with a personality. Uses the profile from
/// the request when a personality prompt was sent, else its own native
/// profile. Questionnaire answers are drawn so that each corrected item
/// rating has expectation equal to the trait score.
class ParametricPersonaAgent final : public ChatAgent {
 public:
  explicit ParametricPersonaAgent(TraitScores native_profile, std::uint64_t seed = 0);
  std::string_view kind() const override { return "persona"; }
  void reset(std::uint64_t seed) override { rng_.seed(seed); }
  std::string complete(const Conversation& conversation, const RequestContext& ctx) override;

 private:
  TraitScores native_;
  std::mt19937_64 rng_;
};

/// Case-insensitive whole-word search for "cooperate" / "defect". Exactly
/// one of the two must occur, and not directly negated ("not", "never",
/// "don't", ...). Throws ParseError otherwise. Never throws anything else.
Action parse_action(std::string_view raw);

struct ActionPrompt {
  std::string context;
  std::optional<std::string> personality;
  std::string history;
};

// [system: personality? + context, user: history + elicitation suffix]
Conversation build_action_conversation(const ActionPrompt& prompt,
                                       const PromptTemplates& t = default_templates());

struct RetryPolicy {
  int max_retries = 5;  // re-asks after the first attempt
  std::chrono::milliseconds backoff_base{500};
  std::chrono::milliseconds backoff_cap{30000};
  std::function<void(std::chrono::milliseconds)> sleep;  // defaults to this_thread::sleep_for
};

struct ActionReply {
  std::string raw;
  Action parsed = Action::Cooperate;
  int attempts = 0;
};

/// Asks for one move. Parse failures append the reply and a format reminder
/// and ask again; transport failures back off exponentially and resend.
/// Throws AgentFailure once 1 + max_retries attempts are used up, or
/// immediately on FixtureMissing.
ActionReply elicit_action(ChatAgent& agent, const ActionPrompt& prompt, RequestContext ctx,
                          const RetryPolicy& policy = {}, const PromptTemplates& t = default_templates());

/// Adapts a ChatAgent to the match engine: renders history each round and
/// elicits the move. The opponent's identity is never part of any prompt.
class LlmMatchAgent final : public MatchAgent {
 public:
  struct Setup {
    int rounds = 10;
    PayoffMatrix matrix;
    std::optional<PersonalityProfile> profile;
    std::string replay_prefix;
    RetryPolicy retry;
  };

  LlmMatchAgent(ChatAgent& agent, Setup setup, const PromptTemplates& t = default_templates());

  void begin_match(std::uint64_t seed) override;
  AgentMove decide(std::span<const RoundOutcome> completed, int round_index) override;

  // System message sent every round (personality block + game context).
  std::string system_prompt() const;

 private:
  ChatAgent& agent_;
  Setup setup_;
  const PromptTemplates& templates_;
  std::string context_;
  std::optional<std::string> personality_;
};

}  // namespace coopsteer
