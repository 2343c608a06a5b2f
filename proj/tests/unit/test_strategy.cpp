#include "doctest.h"

#include <cmath>
#include <random>

#include "coopsteer/seeds.hpp"
#include "coopsteer/strategy.hpp"
#include "oracles.hpp"

using namespace coopsteer;

namespace {

constexpr Action C = Action::Cooperate;
constexpr Action D = Action::Defect;

// Feeds `theirs` one round at a time and collects the strategy's moves.
std::vector<Action> play(Strategy& s, const std::vector<Action>& theirs) {
  std::vector<HistoryEntry> history;
  std::vector<Action> moves;
  for (Action opp : theirs) {
    const Action mine = s.next_action(history);
    moves.push_back(mine);
    history.push_back({mine, opp});
  }
  return moves;
}

}  // namespace

TEST_CASE("strategy names round-trip") {
  for (auto k : kAllStrategies) CHECK(strategy_from_name(strategy_name(k)) == k);
  CHECK_THROWS_AS(strategy_from_name("TF2T"), std::invalid_argument);
}

TEST_CASE("deterministic strategies match the reference over random sequences") {
  std::mt19937_64 rng(2024);
  for (auto kind : {StrategyKind::AllC, StrategyKind::AllD, StrategyKind::TitForTat, StrategyKind::GrimTrigger}) {
    auto s = make_strategy(kind, 0);
    int mismatches = 0;
    for (int seq = 0; seq < 1000; ++seq) {
      std::vector<Action> theirs(10);
      for (auto& a : theirs) a = (rng() & 1) ? C : D;
      s->reset(rng());
      const auto moves = play(*s, theirs);
      for (std::size_t r = 0; r < moves.size(); ++r) {
        mismatches += moves[r] != oracle::strategy_move(kind, std::span(theirs).first(r));
      }
    }
    CAPTURE(strategy_name(kind));
    CHECK(mismatches == 0);
  }
}

TEST_CASE("RANDOM follows its seeded stream and ignores history") {
  for (std::uint64_t seed : {0ULL, 1ULL, 0xDEADBEEFULL}) {
    RandomStrategy s;
    s.reset(seed);
    const auto a = play(s, std::vector<Action>(50, C));
    s.reset(seed);
    const auto b = play(s, std::vector<Action>(50, D));
    CHECK(a == b);
    CHECK(a == oracle::random_moves(seed, 50));
  }
}

TEST_CASE("RANDOM is a fair coin") {
  RandomStrategy s;
  s.reset(derive_seed(77, {1}));
  int coop = 0;
  for (int i = 0; i < 10000; ++i) coop += s.next_action({}) == C;
  CHECK(std::abs(coop / 10000.0 - 0.5) <= 0.02);
}

TEST_CASE("TFT mirrors the previous move after opening with cooperation") {
  TitForTat tft;
  const std::vector<Action> theirs = {D, D, C, D, C, C, D, C, C, C};
  const auto moves = play(tft, theirs);
  CHECK(moves[0] == C);
  for (std::size_t r = 1; r < theirs.size(); ++r) CHECK(moves[r] == theirs[r - 1]);
}

TEST_CASE("GRIM never forgives and reset clears the trigger") {
  GrimTrigger g;
  const auto moves = play(g, {C, C, D, C, C, C, C, C, C, C});
  CHECK(moves == std::vector<Action>{C, C, C, D, D, D, D, D, D, D});
  CHECK(g.triggered());
  g.reset(0);
  CHECK_FALSE(g.triggered());
  CHECK(g.next_action({}) == C);
}

TEST_CASE("derive_seed separates paths") {
  CHECK(derive_seed(1, {0, 0}) != derive_seed(1, {0, 1}));
  CHECK(derive_seed(1, {0, 1}) != derive_seed(1, {1, 0}));
  CHECK(derive_seed(1, {2, 3}) == derive_seed(1, {2, 3}));
  CHECK(derive_seed(1, {2, 3}) != derive_seed(2, {2, 3}));
  CHECK(unit_interval(0) == 0.0);
  CHECK(unit_interval(~0ULL) < 1.0);
}
