#include "doctest.h"

#include <fmt/format.h>

#include <cmath>
#include <random>
#include <regex>

#include "coopsteer/bfi.hpp"
#include "coopsteer/config.hpp"
#include "coopsteer/prompts.hpp"
#include "coopsteer/text.hpp"
#include "support.hpp"

using namespace coopsteer;
using test_support::golden;

namespace {

constexpr Action C = Action::Cooperate;
constexpr Action D = Action::Defect;

std::vector<RoundOutcome> rounds_of(const std::vector<std::pair<Action, Action>>& moves) {
  std::vector<RoundOutcome> out;
  for (const auto& [a, b] : moves) {
    const auto [pa, pb] = resolve_round(a, b, PayoffMatrix{});
    out.push_back({static_cast<int>(out.size()) + 1, a, b, pa, pb});
  }
  return out;
}

TraitScores published(const std::string& model) {
  return load_profile_file(data_dir() / "reference" / "model_profiles.json").at(model);
}

void check_no_placeholders(const std::string& text) {
  for (const char* tag : {"[N]", "[X]", "[Action]", "[ITERATIONS]", "[YYY]", "X.X", "{{", "}}"}) {
    CAPTURE(tag);
    CHECK(text.find(tag) == std::string::npos);
  }
}

}  // namespace

TEST_CASE("questionnaire prompt matches its golden file") {
  const auto text = render_bfi_prompt();
  CHECK(text == read_file(golden("bfi_prompt.txt")));
  check_no_placeholders(text);
}

TEST_CASE("game context for 10 rounds matches its golden file") {
  const auto text = render_game_context(10, PayoffMatrix{});
  CHECK(text == read_file(golden("game_context_10.txt")));
  CHECK(text.find("you collect 3 points and your opponent collects 3 points") != std::string::npos);
  CHECK(text.find("you collect 1 point and your opponent collects 1 point.") != std::string::npos);
  check_no_placeholders(text);
  CHECK_THROWS_AS(render_game_context(0, PayoffMatrix{}), std::invalid_argument);
}

TEST_CASE("game context follows a non-default matrix") {
  const auto text = render_game_context(7, PayoffMatrix(9, 4, 1, -2));
  CHECK(text.find("you collect 4 points and your opponent collects 4 points") != std::string::npos);
  CHECK(text.find("you collect -2 points and your opponent collects 9 points") != std::string::npos);
  CHECK(text.find("a total of 7 rounds") != std::string::npos);
}

TEST_CASE("history renders") {
  CHECK(render_history(HistoryView{}) == read_file(golden("history_first_round.txt")));
  const auto r = rounds_of({{C, C}, {C, D}, {D, D}});
  const auto text = render_history(HistoryView(r));
  CHECK(text == read_file(golden("history_three_rounds.txt")));
  check_no_placeholders(text);
}

TEST_CASE("history totals agree with the round list") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::pair<Action, Action>> moves(1 + rng() % 10);
    for (auto& m : moves) m = {(rng() & 1) ? C : D, (rng() & 2) ? C : D};
    const auto rounds = rounds_of(moves);
    const HistoryView view(rounds);
    int sc = 0, oc = 0, st = 0, ot = 0;
    for (const auto& r : rounds) {
      sc += r.self_action == C;
      oc += r.opponent_action == C;
      st += r.self_payoff;
      ot += r.opponent_payoff;
    }
    CHECK(view.self_cooperations() == sc);
    CHECK(view.self_defections() == static_cast<int>(rounds.size()) - sc);
    CHECK(view.opponent_cooperations() == oc);
    CHECK(view.self_total() == st);
    CHECK(view.opponent_total() == ot);

    const auto text = render_history(view);
    CHECK(text.find(fmt::format("you collected {} points and your opponent collected {} points.", st, ot)) !=
          std::string::npos);
    CHECK(text.find(fmt::format("Current round: {}.", rounds.size() + 1)) != std::string::npos);
    CHECK(text.find(fmt::format("in the last {} rounds", rounds.size())) != std::string::npos);
    const std::regex line("^Round \\d+: ", std::regex::multiline);
    CHECK(std::distance(std::sregex_iterator(text.begin(), text.end(), line), std::sregex_iterator()) ==
          static_cast<long>(rounds.size()));
  }
}

TEST_CASE("history rejects misnumbered rounds") {
  auto r = rounds_of({{C, C}, {C, D}});
  r[1].round_index = 3;
  CHECK_THROWS_AS(HistoryView{r}, std::invalid_argument);
}

TEST_CASE("bucket boundaries are half-open with a closed top") {
  CHECK(bucket_index(1.0) == 0);
  CHECK(bucket_index(1.4999) == 0);
  CHECK(bucket_index(1.5) == 1);
  CHECK(bucket_index(2.5) == 2);
  CHECK(bucket_index(3.5) == 3);
  CHECK(bucket_index(4.4999) == 3);
  CHECK(bucket_index(4.5) == 4);
  CHECK(bucket_index(5.0) == 4);
  CHECK_THROWS_AS(bucket_index(0.999), std::out_of_range);
  CHECK_THROWS_AS(bucket_index(5.001), std::out_of_range);
  CHECK_THROWS_AS(bucket_index(std::nan("")), std::out_of_range);
}

TEST_CASE("every score on a 0.001 grid gets exactly one description") {
  const auto& t = default_templates();
  for (auto trait : kTraitOrder) {
    int previous = 0;
    for (int i = 1000; i <= 5000; ++i) {
      const double s = i / 1000.0;
      const int b = bucket_index(s);
      CHECK(b >= previous);  // monotone
      previous = b;
      const auto& text = bucket_description(trait, s);
      int hits = 0;
      for (const auto& candidate : t.descriptions[index_of(trait)]) hits += candidate == text;
      CHECK(hits == 1);
    }
  }
}

TEST_CASE("agreeableness buckets for the measured and manipulated profiles") {
  CHECK(bucket_description(Trait::Agreeableness, 4.27).starts_with("You are generally cooperative and trusting"));
  CHECK(bucket_description(Trait::Agreeableness, 5.0).starts_with("You are highly cooperative and trusting"));
  CHECK(bucket_description(Trait::Extraversion, 1.5).starts_with("You are somewhat introverted"));
}

TEST_CASE("personality prompts match their golden files") {
  for (const char* model : {"gpt-3.5-turbo", "gpt-4o", "gpt-5"}) {
    CAPTURE(model);
    const auto text = render_personality_prompt(PersonalityProfile::measured(published(model)));
    CHECK(text == read_file(golden(std::string("personality_") + model + ".txt")));
    check_no_placeholders(text);
  }
  const auto manipulated =
      PersonalityProfile::manipulated(published("gpt-4o"), Manipulation{Trait::Agreeableness, 5});
  CHECK(render_personality_prompt(manipulated) == read_file(golden("personality_gpt-4o_A5.txt")));
}

TEST_CASE("GPT-4o agreeableness line") {
  const auto text = render_personality_prompt(PersonalityProfile::measured(published("gpt-4o")));
  CHECK(text.find("- Agreeableness (4.3/5.0): You are generally cooperative and trusting") != std::string::npos);
}

TEST_CASE("manipulation replaces exactly one trait") {
  const auto base = published("gpt-5");
  for (auto trait : kTraitOrder) {
    for (int v : {1, 5}) {
      const auto p = PersonalityProfile::manipulated(base, {trait, v});
      for (auto other : kTraitOrder) {
        CHECK(p.scores[other] == (other == trait ? v : base[other]));
      }
      CHECK(p.manipulation.has_value());
      check_no_placeholders(render_personality_prompt(p));
    }
  }
  CHECK_THROWS(PersonalityProfile::manipulated(base, {Trait::Openness, 3}));
}

TEST_CASE("score display rounds half-even on the decimal value") {
  CHECK(format_fixed(3.15, 1) == "3.2");
  CHECK(format_fixed(3.25, 1) == "3.2");
  CHECK(format_fixed(3.35, 1) == "3.4");
  CHECK(format_fixed(4.27, 1) == "4.3");
  CHECK(format_fixed(1.96, 1) == "2.0");
  CHECK(format_fixed(4.96, 1) == "5.0");
  CHECK(format_fixed(9.95, 1) == "10.0");
  CHECK(format_fixed(5.0, 1) == "5.0");
  CHECK(format_fixed(0.125, 2) == "0.12");
  CHECK(format_fixed(0.135, 2) == "0.14");
  CHECK(format_fixed(-0.04, 1) == "0.0");
  CHECK(format_fixed(-1.26, 1) == "-1.3");
  CHECK(format_fixed(2.0, 0) == "2");
  CHECK(format_fixed(2.5, 0) == "2");
}

TEST_CASE("substitute fills every placeholder or fails") {
  CHECK(substitute("a {{X}} b {{Y}}", {{"X", "1"}, {"Y", "2"}}) == "a 1 b 2");
  CHECK_THROWS(substitute("a {{Z}}", {{"X", "1"}}));
  CHECK_THROWS(substitute("a {{X", {{"X", "1"}}));
}
