#include "coopsteer/game.hpp"

#include <chrono>
#include <ctime>
#include <numeric>
#include <string>

#include <fmt/format.h>

#include "coopsteer/seeds.hpp"

namespace coopsteer {

std::string_view to_string(Action action) {
  return action == Action::Cooperate ? "Cooperate" : "Defect";
}

Action action_from_string(std::string_view text) {
  if (text == "Cooperate") return Action::Cooperate;
  if (text == "Defect") return Action::Defect;
  throw std::invalid_argument("not an action: " + std::string(text));
}

PayoffMatrix::PayoffMatrix(int temptation, int reward, int punishment, int sucker)
    : t_(temptation), r_(reward), p_(punishment), s_(sucker) {
  if (!(t_ > r_ && r_ > p_ && p_ > s_)) {
    throw std::invalid_argument(
        fmt::format("payoffs must satisfy T > R > P > S, got ({}, {}, {}, {})", t_, r_, p_, s_));
  }
}

std::pair<int, int> resolve_round(Action a, Action b, const PayoffMatrix& m) {
  if (a == Action::Cooperate) {
    return b == Action::Cooperate ? std::pair{m.reward(), m.reward()}
                                  : std::pair{m.sucker(), m.temptation()};
  }
  return b == Action::Cooperate ? std::pair{m.temptation(), m.sucker()}
                                : std::pair{m.punishment(), m.punishment()};
}

int cumulative_payoff(const MatchRecord& record) {
  return std::accumulate(record.rounds.begin(), record.rounds.end(), 0,
                         [](int acc, const RoundOutcome& r) { return acc + r.self_payoff; });
}

int opponent_cumulative_payoff(const MatchRecord& record) {
  return std::accumulate(record.rounds.begin(), record.rounds.end(), 0,
                         [](int acc, const RoundOutcome& r) { return acc + r.opponent_payoff; });
}

std::string utc_timestamp_now() {
  using namespace std::chrono;
  const auto now = system_clock::now();
  const std::time_t secs = system_clock::to_time_t(now);
  const auto millis = duration_cast<milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&secs, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  return fmt::format("{}.{:03d}Z", buf, millis);
}

MatchRecord run_match(MatchAgent& agent, Strategy& opponent, const MatchSettings& settings) {
  if (settings.rounds < 1) {
    throw std::invalid_argument("a match needs at least one round");
  }
  const auto stamp = settings.clock ? settings.clock : utc_timestamp_now;

  MatchRecord rec;
  rec.match_id = settings.match_id;
  rec.condition_id = settings.condition_id;
  rec.trial = settings.trial;
  rec.matrix = settings.matrix;
  rec.rng_seed = settings.seed;
  rec.started_at = stamp();

  agent.begin_match(derive_seed(settings.seed, {0}));
  opponent.reset(derive_seed(settings.seed, {1}));

  std::vector<HistoryEntry> opponent_view;
  opponent_view.reserve(settings.rounds);
  rec.rounds.reserve(settings.rounds);

  for (int round = 1; round <= settings.rounds; ++round) {
    // Both choices are made from completed rounds only.
    const Action theirs = opponent.next_action(opponent_view);
    AgentMove mine = agent.decide(rec.rounds, round);

    const auto [self_points, opp_points] = resolve_round(mine.action, theirs, settings.matrix);
    rec.rounds.push_back({round, mine.action, theirs, self_points, opp_points});
    rec.prompts.push_back(std::move(mine.prompt));
    rec.raw_replies.push_back(std::move(mine.raw_reply));
    rec.attempts.push_back(mine.attempts);
    opponent_view.push_back({theirs, mine.action});
  }
  rec.finished_at = stamp();
  return rec;
}

nlohmann::json to_json(const MatchRecord& record) {
  nlohmann::json rounds = nlohmann::json::array();
  for (std::size_t i = 0; i < record.rounds.size(); ++i) {
    const auto& r = record.rounds[i];
    rounds.push_back({
        {"round", r.round_index},
        {"self_action", to_string(r.self_action)},
        {"opponent_action", to_string(r.opponent_action)},
        {"self_payoff", r.self_payoff},
        {"opponent_payoff", r.opponent_payoff},
        {"prompt", i < record.prompts.size() ? record.prompts[i] : ""},
        {"raw_reply", i < record.raw_replies.size() ? record.raw_replies[i] : ""},
        {"attempts", i < record.attempts.size() ? record.attempts[i] : 1},
    });
  }
  const auto& m = record.matrix;
  return {
      {"schema_version", kTranscriptSchemaVersion},
      {"match_id", record.match_id},
      {"condition_id", record.condition_id},
      {"trial", record.trial},
      {"payoff_matrix", {{"T", m.temptation()}, {"R", m.reward()}, {"P", m.punishment()}, {"S", m.sucker()}}},
      {"rng_seed", record.rng_seed},
      {"started_at", record.started_at},
      {"finished_at", record.finished_at},
      {"system_prompt", record.system_prompt},
      {"cumulative_payoff", cumulative_payoff(record)},
      {"opponent_cumulative_payoff", opponent_cumulative_payoff(record)},
      {"rounds", std::move(rounds)},
  };
}

MatchRecord match_record_from_json(const nlohmann::json& j) {
  if (j.value("schema_version", 0) != kTranscriptSchemaVersion) {
    throw std::invalid_argument("unsupported transcript schema_version");
  }
  MatchRecord rec;
  rec.match_id = j.at("match_id").get<std::string>();
  rec.condition_id = j.at("condition_id").get<std::string>();
  rec.trial = j.at("trial").get<int>();
  const auto& pm = j.at("payoff_matrix");
  rec.matrix = PayoffMatrix(pm.at("T").get<int>(), pm.at("R").get<int>(), pm.at("P").get<int>(),
                            pm.at("S").get<int>());
  rec.rng_seed = j.at("rng_seed").get<std::uint64_t>();
  rec.started_at = j.value("started_at", "");
  rec.finished_at = j.value("finished_at", "");
  rec.system_prompt = j.value("system_prompt", "");
  for (const auto& r : j.at("rounds")) {
    RoundOutcome out{r.at("round").get<int>(),
                     action_from_string(r.at("self_action").get<std::string>()),
                     action_from_string(r.at("opponent_action").get<std::string>()),
                     r.at("self_payoff").get<int>(), r.at("opponent_payoff").get<int>()};
    const auto expected = resolve_round(out.self_action, out.opponent_action, rec.matrix);
    if (expected != std::pair{out.self_payoff, out.opponent_payoff}) {
      throw std::invalid_argument(
          fmt::format("match {} round {}: payoffs inconsistent with matrix", rec.match_id, out.round_index));
    }
    rec.rounds.push_back(out);
    rec.prompts.push_back(r.value("prompt", ""));
    rec.raw_replies.push_back(r.value("raw_reply", ""));
    rec.attempts.push_back(r.value("attempts", 1));
  }
  if (j.contains("cumulative_payoff") && j["cumulative_payoff"].get<int>() != cumulative_payoff(rec)) {
    throw std::invalid_argument("match " + rec.match_id + ": cumulative payoff mismatch");
  }
  return rec;
}

}  // namespace coopsteer
