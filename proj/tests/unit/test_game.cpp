#include "doctest.h"

#include <random>

#include "coopsteer/game.hpp"
#include "coopsteer/strategy.hpp"
#include "support.hpp"

using namespace coopsteer;
using test_support::FixedMoves;

namespace {

constexpr Action C = Action::Cooperate;
constexpr Action D = Action::Defect;

// Opponent that records what history it was shown.
class Spy final : public Strategy {
 public:
  StrategyKind kind() const override { return StrategyKind::AllC; }
  void reset(std::uint64_t) override { seen.clear(); }
  Action next_action(std::span<const HistoryEntry> history) override {
    seen.emplace_back(history.begin(), history.end());
    return C;
  }
  std::vector<std::vector<HistoryEntry>> seen;
};

}  // namespace

TEST_CASE("actions serialize to their exact names") {
  CHECK(to_string(C) == "Cooperate");
  CHECK(to_string(D) == "Defect");
  CHECK(action_from_string("Cooperate") == C);
  CHECK(action_from_string("Defect") == D);
  CHECK_THROWS_AS(action_from_string("cooperate"), std::invalid_argument);
}

TEST_CASE("payoff matrix validation") {
  PayoffMatrix m;
  CHECK(m.temptation() == 5);
  CHECK(m.reward() == 3);
  CHECK(m.punishment() == 1);
  CHECK(m.sucker() == 0);
  CHECK_NOTHROW(PayoffMatrix(4, 3, 2, 1));
  CHECK_THROWS_AS(PayoffMatrix(3, 3, 1, 0), std::invalid_argument);
  CHECK_THROWS_AS(PayoffMatrix(5, 3, 0, 1), std::invalid_argument);
  CHECK_THROWS_AS(PayoffMatrix(0, 1, 3, 5), std::invalid_argument);
}

TEST_CASE("resolve_round on the default matrix") {
  const PayoffMatrix m;
  CHECK(resolve_round(C, C, m) == std::pair{3, 3});
  CHECK(resolve_round(C, D, m) == std::pair{0, 5});
  CHECK(resolve_round(D, C, m) == std::pair{5, 0});
  CHECK(resolve_round(D, D, m) == std::pair{1, 1});
}

TEST_CASE("resolve_round is symmetric and ordered over random matrices") {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> step(1, 20);
  for (int i = 0; i < 2000; ++i) {
    const int s = step(rng) - 10;
    const int p = s + step(rng);
    const int r = p + step(rng);
    const int t = r + step(rng);
    const PayoffMatrix m(t, r, p, s);
    for (Action a : {C, D}) {
      for (Action b : {C, D}) {
        CHECK(resolve_round(a, b, m).first == resolve_round(b, a, m).second);
      }
    }
    // Outcome ordering mirrors T > R > P > S from the row player's view.
    CHECK(resolve_round(D, C, m).first > resolve_round(C, C, m).first);
    CHECK(resolve_round(C, C, m).first > resolve_round(D, D, m).first);
    CHECK(resolve_round(D, D, m).first > resolve_round(C, D, m).first);
  }
}

TEST_CASE("always-cooperate agent against TFT") {
  FixedMoves agent({C});
  auto tft = make_strategy(StrategyKind::TitForTat, 1);
  MatchSettings s;
  const auto rec = run_match(agent, *tft, s);
  REQUIRE(rec.rounds.size() == 10);
  for (const auto& r : rec.rounds) {
    CHECK(r.self_action == C);
    CHECK(r.opponent_action == C);
  }
  CHECK(cumulative_payoff(rec) == 30);
  CHECK(opponent_cumulative_payoff(rec) == 30);
}

TEST_CASE("always-defect agent against GRIM") {
  FixedMoves agent({D});
  auto grim = make_strategy(StrategyKind::GrimTrigger, 1);
  const auto rec = run_match(agent, *grim, MatchSettings{});
  CHECK(rec.rounds[0].opponent_action == C);
  CHECK(rec.rounds[0].self_payoff == 5);
  for (std::size_t i = 1; i < 10; ++i) CHECK(rec.rounds[i].opponent_action == D);
  CHECK(cumulative_payoff(rec) == 14);
}

TEST_CASE("matches need at least one round") {
  FixedMoves agent({C});
  auto allc = make_strategy(StrategyKind::AllC, 0);
  MatchSettings s;
  s.rounds = 0;
  CHECK_THROWS_AS(run_match(agent, *allc, s), std::invalid_argument);
  s.rounds = -3;
  CHECK_THROWS_AS(run_match(agent, *allc, s), std::invalid_argument);
}

TEST_CASE("opponent only ever sees completed rounds") {
  FixedMoves agent({D, C, C, D});
  Spy spy;
  MatchSettings s;
  s.rounds = 6;
  const auto rec = run_match(agent, spy, s);
  REQUIRE(spy.seen.size() == 6);
  for (std::size_t r = 0; r < 6; ++r) {
    REQUIRE(spy.seen[r].size() == r);
    for (std::size_t k = 0; k < r; ++k) {
      CHECK(spy.seen[r][k].opponent == rec.rounds[k].self_action);
      CHECK(spy.seen[r][k].own == rec.rounds[k].opponent_action);
    }
  }
}

TEST_CASE("agent sees completed rounds only, numbered from 1") {
  struct Checker final : MatchAgent {
    void begin_match(std::uint64_t) override {}
    AgentMove decide(std::span<const RoundOutcome> completed, int round_index) override {
      CHECK(static_cast<int>(completed.size()) == round_index - 1);
      for (std::size_t i = 0; i < completed.size(); ++i) CHECK(completed[i].round_index == static_cast<int>(i) + 1);
      return {};
    }
  } agent;
  auto rnd = make_strategy(StrategyKind::Random, 3);
  run_match(agent, *rnd, MatchSettings{});
}

TEST_CASE("agent failure propagates out of run_match") {
  struct Failing final : MatchAgent {
    void begin_match(std::uint64_t) override {}
    AgentMove decide(std::span<const RoundOutcome>, int round_index) override {
      if (round_index == 4) throw AgentFailure("gave up");
      return {};
    }
  } agent;
  auto allc = make_strategy(StrategyKind::AllC, 0);
  CHECK_THROWS_AS(run_match(agent, *allc, MatchSettings{}), AgentFailure);
}

TEST_CASE("cumulative payoff stays within bounds for random play") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 300; ++i) {
    std::vector<Action> moves(10);
    for (auto& a : moves) a = (rng() & 1) ? C : D;
    FixedMoves agent(moves);
    auto opp = make_strategy(kAllStrategies[i % 5], rng());
    MatchSettings s;
    s.seed = rng();
    const auto rec = run_match(agent, *opp, s);
    int sum = 0;
    for (const auto& r : rec.rounds) {
      CHECK(std::pair{r.self_payoff, r.opponent_payoff} == resolve_round(r.self_action, r.opponent_action, s.matrix));
      sum += r.self_payoff;
    }
    CHECK(cumulative_payoff(rec) == sum);
    CHECK(sum >= 0);
    CHECK(sum <= 50);
  }
}

TEST_CASE("same seed, same match") {
  FixedMoves a1({C, D, D}), a2({C, D, D});
  auto r1 = make_strategy(StrategyKind::Random, 0);
  auto r2 = make_strategy(StrategyKind::Random, 99);  // reset() reseeds from the match seed
  MatchSettings s;
  s.seed = 12345;
  s.clock = [] { return std::string("t"); };
  CHECK(to_json(run_match(a1, *r1, s)) == to_json(run_match(a2, *r2, s)));
}

TEST_CASE("transcript JSON round trip and validation") {
  FixedMoves agent({C, D});
  auto tft = make_strategy(StrategyKind::TitForTat, 0);
  MatchSettings s;
  s.match_id = "m1";
  s.condition_id = "c007";
  s.trial = 3;
  s.seed = 42;
  auto rec = run_match(agent, *tft, s);
  rec.system_prompt = "sys";
  const auto j = to_json(rec);
  CHECK(j["schema_version"] == kTranscriptSchemaVersion);
  CHECK(j["cumulative_payoff"] == cumulative_payoff(rec));
  const auto back = match_record_from_json(j);
  CHECK(to_json(back) == j);

  auto bad = j;
  bad["rounds"][2]["self_payoff"] = 4;
  CHECK_THROWS_AS(match_record_from_json(bad), std::invalid_argument);
  bad = j;
  bad["cumulative_payoff"] = 1;
  CHECK_THROWS_AS(match_record_from_json(bad), std::invalid_argument);
  bad = j;
  bad["schema_version"] = 99;
  CHECK_THROWS_AS(match_record_from_json(bad), std::invalid_argument);
}

TEST_CASE("timestamps look like UTC ISO-8601") {
  const auto ts = utc_timestamp_now();
  REQUIRE(ts.size() == 24);
  CHECK(ts[4] == '-');
  CHECK(ts[10] == 'T');
  CHECK(ts.back() == 'Z');
}
