#include "coopsteer/agent.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <thread>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "coopsteer/bfi.hpp"
#include "coopsteer/seeds.hpp"
#include "coopsteer/text.hpp"

namespace coopsteer {

std::string_view role_name(Role role) {
  switch (role) {
    case Role::System: return "system";
    case Role::User: return "user";
    case Role::Assistant: return "assistant";
  }
  return "user";
}

// ---------------------------------------------------------------- scripted

ScriptedAgent::ScriptedAgent(std::vector<std::string> replies) : replies_(std::move(replies)) {
  if (replies_.empty()) throw std::invalid_argument("scripted agent needs at least one reply");
}

std::string ScriptedAgent::complete(const Conversation&, const RequestContext&) {
  ++calls_;
  std::string reply = replies_[next_];
  next_ = (next_ + 1) % replies_.size();
  return reply;
}

// ------------------------------------------------------------------ replay

ReplayAgent::ReplayAgent(std::shared_ptr<const Recordings> recordings)
    : recordings_(std::move(recordings)) {
  if (!recordings_) throw std::invalid_argument("replay agent needs recordings");
}

std::string ReplayAgent::complete(const Conversation&, const RequestContext& ctx) {
  const auto it = recordings_->find(ctx.replay_key);
  if (it == recordings_->end()) throw FixtureMissing("no recording for key " + ctx.replay_key);
  const auto idx = static_cast<std::size_t>(ctx.attempt - 1);
  if (ctx.attempt < 1 || idx >= it->second.size()) {
    throw FixtureMissing(fmt::format("no recording for key {} attempt {}", ctx.replay_key, ctx.attempt));
  }
  return it->second[idx];
}

std::shared_ptr<const ReplayAgent::Recordings> ReplayAgent::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read replay file " + path.string());
  auto rec = std::make_shared<Recordings>();
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto j = nlohmann::json::parse(line);
    auto& replies = (*rec)[j.at("key").get<std::string>()];
    for (const auto& r : j.at("replies")) replies.push_back(r.get<std::string>());
  }
  return rec;
}

std::shared_ptr<const ReplayAgent::Recordings> ReplayAgent::from_transcripts(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read transcripts " + path.string());
  auto rec = std::make_shared<Recordings>();
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto record = match_record_from_json(nlohmann::json::parse(line));
    for (std::size_t i = 0; i < record.rounds.size(); ++i) {
      const auto key = fmt::format("{}/t{}/r{}", record.condition_id, record.trial, i + 1);
      (*rec)[key] = {record.raw_replies[i]};
    }
  }
  return rec;
}

// ----------------------------------------------------------------- persona

double persona_cooperation_probability(double agreeableness, const HistoryView& history) {
  const double p = 0.05 + 0.9 * (agreeableness - 1.0) / 4.0 - 0.3 * history.opponent_defection_rate();
  return std::clamp(p, 0.0, 1.0);
}

Action parametric_persona_policy(const TraitScores& profile, const HistoryView& history,
                                 std::mt19937_64& rng) {
  const double p = persona_cooperation_probability(profile[Trait::Agreeableness], history);
  return unit_interval(rng()) < p ? Action::Cooperate : Action::Defect;
}

ParametricPersonaAgent::ParametricPersonaAgent(TraitScores native_profile, std::uint64_t seed)
    : native_(native_profile), rng_(seed) {
  native_.validate();
}

std::string ParametricPersonaAgent::complete(const Conversation&, const RequestContext& ctx) {
  const TraitScores& profile = ctx.profile ? *ctx.profile : native_;
  if (ctx.purpose == Purpose::Action) {
    static const HistoryView kEmpty;
    const HistoryView& h = ctx.history ? *ctx.history : kEmpty;
    return std::string(to_string(parametric_persona_policy(profile, h, rng_)));
  }
  // Stochastic rounding: E[floor(score + u)] == score for u ~ U[0, 1).
  std::string reply;
  for (const auto& item : default_instrument().items()) {
    const double score = profile[item.dimension];
    const int corrected = std::clamp(static_cast<int>(std::floor(score + unit_interval(rng_()))), 1, 5);
    const int rating = item.reverse_keyed ? 6 - corrected : corrected;
    if (!reply.empty()) reply += '\n';
    reply += fmt::format("({}) {}", item.label, rating);
  }
  return reply;
}

// ------------------------------------------------------------ parse_action

namespace {

bool is_word_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '\'';
}

bool is_negation(std::string_view w) {
  static constexpr std::string_view kNegations[] = {
      "not", "never", "no", "don't", "dont", "won't", "wont", "cannot", "can't", "cant",
      "shouldn't", "wouldn't", "didn't", "doesn't", "mustn't", "neither", "nor"};
  return std::find(std::begin(kNegations), std::end(kNegations), w) != std::end(kNegations);
}

}  // namespace

Action parse_action(std::string_view raw) {
  // Lower-case ASCII copy; the curly apostrophe (U+2019) folds to '.
  std::string text;
  text.reserve(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (raw.compare(i, 3, "\xE2\x80\x99") == 0) {
      text += '\'';
      i += 2;
      continue;
    }
    text += static_cast<char>(std::tolower(static_cast<unsigned char>(raw[i])));
  }

  std::vector<std::string_view> words;
  for (std::size_t i = 0; i < text.size();) {
    if (!is_word_char(text[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < text.size() && is_word_char(text[j])) ++j;
    auto w = std::string_view(text).substr(i, j - i);
    // Quotes used as quotation marks ('Defect') are not part of the word.
    while (!w.empty() && w.front() == '\'') w.remove_prefix(1);
    while (!w.empty() && w.back() == '\'') w.remove_suffix(1);
    if (!w.empty()) words.push_back(w);
    i = j;
  }

  bool saw_cooperate = false;
  bool saw_defect = false;
  for (std::size_t k = 0; k < words.size(); ++k) {
    const bool coop = words[k] == "cooperate";
    const bool defect = words[k] == "defect";
    if (!coop && !defect) continue;
    if (k > 0 && is_negation(words[k - 1])) {
      throw ParseError(fmt::format("negated action in reply: \"{}\"", raw.substr(0, 120)));
    }
    saw_cooperate |= coop;
    saw_defect |= defect;
  }
  if (saw_cooperate && saw_defect) throw ParseError("reply names both actions");
  if (saw_cooperate) return Action::Cooperate;
  if (saw_defect) return Action::Defect;
  throw ParseError("reply names no action");
}

// ------------------------------------------------------------- elicitation

Conversation build_action_conversation(const ActionPrompt& prompt, const PromptTemplates& t) {
  std::string system = prompt.personality ? *prompt.personality + "\n\n" + prompt.context : prompt.context;
  return {
      {Role::System, std::move(system)},
      {Role::User, prompt.history + "\n\n" + t.elicitation_suffix},
  };
}

ActionReply elicit_action(ChatAgent& agent, const ActionPrompt& prompt, RequestContext ctx,
                          const RetryPolicy& policy, const PromptTemplates& t) {
  const int max_attempts = 1 + std::max(0, policy.max_retries);
  auto sleep = policy.sleep ? policy.sleep
                            : [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };

  Conversation conversation = build_action_conversation(prompt, t);
  std::string last_error;
  int transport_failures = 0;
  for (int attempt = 1; attempt <= max_attempts; ++attempt) {
    ctx.attempt = attempt;
    std::string raw;
    try {
      raw = agent.complete(conversation, ctx);
    } catch (const TransportError& e) {
      last_error = e.what();
      ++transport_failures;
      spdlog::warn("transport error on {} attempt {}: {}", ctx.replay_key, attempt, e.what());
      if (attempt < max_attempts) {
        const auto factor = std::int64_t{1} << std::min(transport_failures - 1, 20);
        sleep(std::min(policy.backoff_base * factor, policy.backoff_cap));
      }
      continue;
    } catch (const FixtureMissing& e) {
      throw AgentFailure(e.what());
    }

    try {
      return {raw, parse_action(raw), attempt};
    } catch (const ParseError& e) {
      last_error = e.what();
      conversation.push_back({Role::Assistant, raw});
      conversation.push_back({Role::User, t.format_reminder});
    }
  }
  throw AgentFailure(fmt::format("no usable action after {} attempts ({}): {}", max_attempts,
                                 ctx.replay_key, last_error));
}

LlmMatchAgent::LlmMatchAgent(ChatAgent& agent, Setup setup, const PromptTemplates& t)
    : agent_(agent), setup_(std::move(setup)), templates_(t) {
  context_ = render_game_context(setup_.rounds, setup_.matrix, templates_);
  if (setup_.profile) personality_ = render_personality_prompt(*setup_.profile, templates_);
}

void LlmMatchAgent::begin_match(std::uint64_t seed) { agent_.reset(seed); }

std::string LlmMatchAgent::system_prompt() const {
  return build_action_conversation({context_, personality_, ""}, templates_).front().content;
}

AgentMove LlmMatchAgent::decide(std::span<const RoundOutcome> completed, int round_index) {
  const HistoryView view(completed);
  ActionPrompt prompt{context_, personality_, render_history(view, templates_)};

  RequestContext ctx;
  ctx.purpose = Purpose::Action;
  ctx.replay_key = fmt::format("{}/r{}", setup_.replay_prefix, round_index);
  ctx.profile = setup_.profile ? &setup_.profile->scores : nullptr;
  ctx.history = &view;

  auto reply = elicit_action(agent_, prompt, ctx, setup_.retry, templates_);
  const auto user_message = build_action_conversation(prompt, templates_).back().content;
  return {reply.parsed, user_message, std::move(reply.raw), reply.attempts};
}

}  // namespace coopsteer
