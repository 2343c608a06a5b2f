// Acceptance checks. One PASS/FAIL line per criterion; exit status is the
// number of failures.

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <random>
#include <set>

#include "coopsteer/analysis.hpp"
#include "coopsteer/bfi.hpp"
#include "coopsteer/prompts.hpp"
#include "coopsteer/rate_limiter.hpp"
#include "coopsteer/runner.hpp"
#include "coopsteer/seeds.hpp"
#include "coopsteer/text.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace coopsteer;
using test_support::TempDir;

namespace {

constexpr Action C = Action::Cooperate;
constexpr Action D = Action::Defect;

struct Outcome {
  bool ok = true;
  std::string detail;
  void fail(const std::string& why) {
    if (ok) detail = why;
    ok = false;
  }
  void require(bool cond, const std::string& why) {
    if (!cond) fail(why);
  }
};

int failures = 0;

void criterion(int n, const char* name, double budget_s, const std::function<void(Outcome&)>& body) {
  Outcome out;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    body(out);
  } catch (const std::exception& e) {
    out.fail(std::string("exception: ") + e.what());
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (budget_s > 0 && secs > budget_s) out.fail(fmt::format("took {:.2f} s, budget {:.0f} s", secs, budget_s));
  if (!out.ok) ++failures;
  fmt::print("{} {} {:<28} {:6.2f} s  {}\n", out.ok ? "PASS" : "FAIL", n, name, secs, out.detail);
  std::fflush(stdout);
}

RunOptions no_sleep() {
  RunOptions o;
  o.sleep = [](std::chrono::milliseconds) {};
  return o;
}

nlohmann::json gpt4o_profile() { return {{"O", 4.68}, {"C", 4.12}, {"E", 3.15}, {"A", 4.27}, {"N", 1.98}}; }

void payoff_engine(Outcome& out) {
  const PayoffMatrix m;
  for (Action a : {C, D}) {
    for (Action b : {C, D}) {
      const auto got = resolve_round(a, b, m);
      const auto want = oracle::payoff(a, b);
      out.require(got.first == want.first && got.second == want.second,
                  fmt::format("{}/{} gives {}/{}", to_string(a), to_string(b), got.first, got.second));
    }
  }
  std::mt19937_64 rng(1);
  for (int i = 0; i < 10000; ++i) {
    int v[4];
    for (int& x : v) x = static_cast<int>(rng() % 201) - 100;
    std::sort(v, v + 4);
    if (v[0] == v[1] || v[1] == v[2] || v[2] == v[3]) continue;
    const PayoffMatrix pm(v[3], v[2], v[1], v[0]);
    const int t = resolve_round(D, C, pm).first, r = resolve_round(C, C, pm).first;
    const int p = resolve_round(D, D, pm).first, s = resolve_round(C, D, pm).first;
    out.require(t > r && r > p && p > s, "ordering broken for a random matrix");
    out.require(resolve_round(C, D, pm).second == t && resolve_round(D, C, pm).second == s, "matrix not symmetric");
  }
  out.detail = "4/4 action pairs, 10k random matrices";
}

void strategy_oracles(Outcome& out) {
  std::mt19937_64 rng(2);
  long mismatches = 0;
  for (auto kind : kAllStrategies) {
    auto s = make_strategy(kind, 0);
    for (int seq = 0; seq < 1000; ++seq) {
      std::vector<Action> theirs(10);
      for (auto& a : theirs) a = (rng() & 1) ? C : D;
      const auto seed = rng();
      s->reset(seed);
      const auto random_ref = oracle::random_moves(seed, 10);
      std::vector<HistoryEntry> history;
      for (std::size_t r = 0; r < theirs.size(); ++r) {
        const Action mine = s->next_action(history);
        const Action want = kind == StrategyKind::Random ? random_ref[r]
                                                         : oracle::strategy_move(kind, std::span(theirs).first(r));
        mismatches += mine != want;
        history.push_back({mine, theirs[r]});
      }
    }
  }
  out.require(mismatches == 0, fmt::format("{} mismatches", mismatches));
  if (out.ok) out.detail = "5 strategies x 1000 sequences, 0 mismatches";
}

void bfi_scoring(Outcome& out) {
  std::mt19937_64 rng(3);
  double worst_reflection = 0;
  for (int i = 0; i < 10000; ++i) {
    BfiResponseSet r;
    for (auto& x : r.ratings) x = 1 + static_cast<int>(rng() % 5);
    const auto got = score_bfi(r);
    const auto want = oracle::bfi_score(r.ratings);
    BfiResponseSet reflected = r;
    for (auto& x : reflected.ratings) x = 6 - x;
    const auto back = score_bfi(reflected);
    for (std::size_t d = 0; d < 5; ++d) {
      out.require(got.values[d] == want[d], "scorer disagrees with the reference");
      worst_reflection = std::max(worst_reflection, std::abs(got.values[d] + back.values[d] - 6.0));
    }
  }
  out.require(worst_reflection <= 1e-12, fmt::format("reflection error {}", worst_reflection));
  BfiResponseSet threes;
  threes.ratings.fill(3);
  for (double v : score_bfi(threes).values) out.require(v == 3.0, "all-3s input does not score 3.0");
  if (out.ok) out.detail = fmt::format("10k sets exact, max reflection error {:.1e}", worst_reflection);
}

void published_replay(Outcome& out) {
  // published means, O C E A N
  const std::map<std::string, std::array<double, 5>> published = {
      {"gpt-3.5-turbo", {4.58, 4.06, 3.78, 4.24, 1.96}},
      {"gpt-4o", {4.68, 4.12, 3.15, 4.27, 1.98}},
      {"gpt-5", {4.69, 4.69, 3.10, 4.27, 2.11}},
  };
  TempDir tmp;
  nlohmann::json models = nlohmann::json::array();
  for (const auto& [name, _] : published) {
    models.push_back({{"name", name},
                      {"backend", "replay"},
                      {"replay_file", test_support::fixture("bfi_published_replay.jsonl").string()}});
  }
  const nlohmann::json j = {{"models", models},     {"experiments", {"E1_BFI"}}, {"bfi_runs", 20},
                            {"fixture_mode", true}, {"parallelism", 3},           {"output_dir", tmp.path().string()}};
  const auto summary = start_run(RunConfig::from_json(j), no_sleep());
  out.require(summary.failed == 0 && summary.pending == 0, "administrations failed");
  const auto stats = bfi_stats_by_model(load_bfi_runs(RunPaths{summary.dir}.bfi_runs()));
  out.require(stats.size() == 3, "expected three models");
  double worst = 0;
  for (const auto& [name, st] : stats) {
    out.require(st.n_runs == 20, name + ": not 20 runs");
    for (auto t : kTraitOrder) {
      const double err = std::abs(st.mean[t] - published.at(name)[index_of(t)]);
      worst = std::max(worst, err);
      out.require(err <= 0.005, fmt::format("{} {} mean {:.4f}", name, trait_letter(t), st.mean[t]));
    }
  }
  if (out.ok) out.detail = fmt::format("3 models x 5 traits, max |error| {:.4f} (population SD)", worst);
}

void prompt_goldens(Outcome& out) {
  using test_support::golden;
  auto same = [&](const std::string& text, const std::string& file) {
    out.require(text == read_file(golden(file)), file + " differs");
  };
  same(render_bfi_prompt(), "bfi_prompt.txt");
  same(render_game_context(10, PayoffMatrix{}), "game_context_10.txt");
  same(render_history(HistoryView{}), "history_first_round.txt");

  std::vector<RoundOutcome> rounds;
  for (auto [a, b] : std::vector<std::pair<Action, Action>>{{C, C}, {C, D}, {D, D}}) {
    const auto [pa, pb] = oracle::payoff(a, b);
    rounds.push_back({static_cast<int>(rounds.size()) + 1, a, b, pa, pb});
  }
  same(render_history(HistoryView(rounds)), "history_three_rounds.txt");

  const std::map<std::string, TraitScores> published = {
      {"gpt-3.5-turbo", TraitScores{{4.58, 4.06, 3.78, 4.24, 1.96}}},
      {"gpt-4o", TraitScores{{4.68, 4.12, 3.15, 4.27, 1.98}}},
      {"gpt-5", TraitScores{{4.69, 4.69, 3.10, 4.27, 2.11}}},
  };
  for (const auto& [name, scores] : published) {
    same(render_personality_prompt(PersonalityProfile::measured(scores)), "personality_" + name + ".txt");
  }
  same(render_personality_prompt(
           PersonalityProfile::manipulated(published.at("gpt-4o"), Manipulation{Trait::Agreeableness, 5})),
       "personality_gpt-4o_A5.txt");

  out.require(bucket_description(Trait::Agreeableness, 4.27).starts_with("You are generally cooperative and trusting"),
              "A=4.27 bucket");
  out.require(bucket_description(Trait::Agreeableness, 5.0).starts_with("You are highly cooperative and trusting"),
              "A=5.0 bucket");
  if (out.ok) out.detail = "8 goldens byte-identical, A buckets correct";
}

void end_to_end(Outcome& out) {
  TempDir tmp;
  const nlohmann::json j = {{"models", {{{"name", "always-c"}, {"backend", "scripted"}, {"script", {"Cooperate"}}}}},
                            {"experiments", {"E2_baseline"}},
                            {"trials", 2},
                            {"rounds", 10},
                            {"master_seed", 6},
                            {"fixture_mode", true},
                            {"output_dir", tmp.path().string()}};
  const auto summary = start_run(RunConfig::from_json(j), no_sleep());
  const RunPaths paths{summary.dir};
  const auto records = load_transcripts(paths.transcripts());
  out.require(records.size() == 10, fmt::format("{} records", records.size()));
  const auto manifest = RunManifest::load(paths.manifest());
  const auto stats = summarize(manifest, records);
  out.require(stats.size() == 5, "expected five groups");

  // Hand computation: an always-cooperating agent earns R per opponent
  // cooperation and S otherwise; opponents are recomputed from their definitions.
  for (const auto& s : stats) {
    const auto opp = *s.key.opponent;
    double total = 0;
    for (std::size_t ci = 0; ci < manifest.conditions.size(); ++ci) {
      if (manifest.conditions[ci].opponent != opp) continue;
      for (int trial = 0; trial < 2; ++trial) {
        std::vector<Action> theirs;
        if (opp == StrategyKind::Random) {
          theirs = oracle::random_moves(derive_seed(trial_seed(6, ci, trial), {1}), 10);
        } else {
          std::vector<Action> mine;
          for (int r = 0; r < 10; ++r) {
            theirs.push_back(oracle::strategy_move(opp, mine));
            mine.push_back(C);
          }
        }
        for (Action a : theirs) total += oracle::payoff(C, a).first;
      }
    }
    const double want_norm = total / 2 / (10 * 5);
    out.require(s.avg_cooperation_rate == 1.0, fmt::format("{}: rate not 1.0", strategy_name(opp)));
    out.require(std::abs(s.normalized_payoff - want_norm) < 1e-12,
                fmt::format("{}: normalized {} vs {}", strategy_name(opp), s.normalized_payoff, want_norm));
  }
  auto find = [&](StrategyKind k) {
    return *std::find_if(stats.begin(), stats.end(), [&](const SummaryStats& s) { return s.key.opponent == k; });
  };
  out.require(find(StrategyKind::TitForTat).normalized_payoff == 0.6, "vs TFT not 0.6");
  out.require(find(StrategyKind::AllD).normalized_payoff == 0.0, "vs ALLD not 0.0");
  if (out.ok) {
    out.detail = fmt::format("10 records; TFT 0.6, ALLD 0.0, RANDOM {:.2f}, all rates 1.0",
                             find(StrategyKind::Random).normalized_payoff);
  }
}

void agreeableness_dominates(Outcome& out) {
  TempDir tmp;
  const nlohmann::json j = {{"models", {{{"name", "persona-gpt-4o"}, {"backend", "persona"}}}},
                            {"experiments", {"E3_manipulated"}},
                            {"trials", 100},
                            {"rounds", 10},
                            {"master_seed", 20251015},
                            {"fixture_mode", true},
                            {"parallelism", 4},
                            {"profiles", {{"persona-gpt-4o", gpt4o_profile()}}},
                            {"output_dir", tmp.path().string()}};
  const auto summary = start_run(RunConfig::from_json(j), no_sleep());
  const auto stats = summarize(RunManifest::load(RunPaths{summary.dir}.manifest()),
                               load_transcripts(RunPaths{summary.dir}.transcripts()));
  const auto diffs = diff_table(stats);
  out.require(diffs.size() == 25, "expected 25 differences");
  double min_a = 1, max_other = 0;
  for (const auto& d : diffs) {
    if (d.trait == Trait::Agreeableness) {
      min_a = std::min(min_a, d.delta_cooperation);
      out.require(d.delta_cooperation > 0.5,
                  fmt::format("A vs {}: {:+.3f}", strategy_name(d.opponent), d.delta_cooperation));
    } else {
      max_other = std::max(max_other, std::abs(d.delta_cooperation));
      out.require(std::abs(d.delta_cooperation) < 0.1, fmt::format("{} vs {}: {:+.3f}", trait_letter(d.trait),
                                                                   strategy_name(d.opponent), d.delta_cooperation));
    }
  }
  if (out.ok) out.detail = fmt::format("min A delta {:+.3f}, max |other| {:.3f}", min_a, max_other);
}

void matrix_and_resume(Outcome& out) {
  nlohmann::json j = {{"models", {{{"name", "p"}, {"backend", "persona"}}}},
                      {"experiments", {"E3_manipulated"}},
                      {"trials", 3},
                      {"rounds", 6},
                      {"master_seed", 8},
                      {"fixture_mode", true},
                      {"parallelism", 4},
                      {"profiles", {{"p", gpt4o_profile()}}}};
  const auto conds = build_conditions(RunConfig::from_json(j));
  std::set<std::pair<int, int>> manipulations;
  for (const auto& c : conds) manipulations.insert({static_cast<int>(c.manipulation->trait), c.manipulation->value});
  out.require(manipulations.size() == 10, fmt::format("{} personality conditions", manipulations.size()));
  out.require(conds.size() == 50, fmt::format("{} cells", conds.size()));

  TempDir tmp;
  j["output_dir"] = (tmp.path() / "whole").string();
  const auto whole = start_run(RunConfig::from_json(j), no_sleep());

  j["output_dir"] = (tmp.path() / "split").string();
  auto opts = no_sleep();
  opts.max_trials = 40;
  const auto first = start_run(RunConfig::from_json(j), opts);
  const auto before = RunManifest::load(RunPaths{first.dir}.manifest());
  const auto second = resume_run(first.dir, no_sleep());
  out.require(first.executed == 40, "interrupted run did not stop at 40");
  out.require(second.executed == before.pending_trials(),
              fmt::format("resume ran {} for {} missing", second.executed, before.pending_trials()));

  const auto records = load_transcripts(RunPaths{first.dir}.transcripts());
  std::set<std::pair<std::string, int>> pairs;
  for (const auto& r : records) pairs.insert({r.condition_id, r.trial});
  out.require(records.size() == 150 && pairs.size() == 150, "duplicate or missing (condition, trial) pairs");
  out.require(read_file(RunPaths{first.dir}.transcripts()) == read_file(RunPaths{whole.dir}.transcripts()),
              "resumed transcripts differ from an uninterrupted run");
  if (out.ok) out.detail = "10 conditions, 50 cells; resume ran 110 missing of 150";
}

// Counts sends and answers with a rotating set of malformed replies.
class Malformed final : public ChatAgent {
 public:
  std::string_view kind() const override { return "malformed"; }
  std::string complete(const Conversation&, const RequestContext&) override {
    static const std::array<const char*, 5> kReplies = {"I'd rather not say.", "(a) 6", "(a) four", "(a) 3\n(a) 3",
                                                        "(a) 3\n(b) 2"};
    return kReplies[calls++ % kReplies.size()];
  }
  int calls = 0;
};

void robustness(Outcome& out) {
  std::mt19937_64 rng(9);
  static const std::string alphabet = "CcooperateDdefectNnotdon't never\n\t .,!?\"'-_0123456789()[]{}\xc3\xa9\xe2\x80\x99";
  static const std::array<std::string, 6> words = {"cooperate", "Defect", "not", "never", "won't", "Cooperation"};
  int parsed = 0, rejected = 0;
  for (int i = 0; i < 100000; ++i) {
    std::string s;
    const int len = static_cast<int>(rng() % 64);
    for (int k = 0; k < len; ++k) {
      if (rng() % 8 == 0) {
        s += words[rng() % words.size()];
      } else if (rng() % 4 == 0) {
        s += static_cast<char>(rng() % 256);
      } else {
        s += alphabet[rng() % alphabet.size()];
      }
    }
    try {
      parse_action(s);
      ++parsed;
    } catch (const ParseError&) {
      ++rejected;
    }
  }

  for (int cap : {1, 2, 5, 8}) {
    Malformed agent;
    AdministrationOptions opt;
    opt.max_attempts = cap;
    opt.sleep = [](std::chrono::milliseconds) {};
    bool typed = false;
    try {
      administer_bfi_run(agent, 1, 0, opt);
    } catch (const MeasurementFailure& e) {
      typed = e.attempts() == cap;
    }
    out.require(typed && agent.calls == cap, fmt::format("cap {}: {} sends", cap, agent.calls));
  }

  for (int budget : {1, 4, 30}) {
    auto clock = std::make_shared<VirtualClock>();
    RateLimiter limiter(budget, clock);
    std::vector<Clock::time_point> admitted;
    for (int i = 0; i < 400; ++i) {
      clock->advance(std::chrono::milliseconds(rng() % 3000));
      admitted.push_back(limiter.acquire());
    }
    for (std::size_t i = 0; i + budget < admitted.size(); ++i) {
      out.require(admitted[i + budget] - admitted[i] >= std::chrono::seconds(60),
                  fmt::format("budget {} exceeded", budget));
    }
  }
  if (out.ok) {
    out.detail = fmt::format("100k strings ({} parsed, {} rejected), BFI caps 1/2/5/8, limiter ok", parsed, rejected);
  }
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::off);
  criterion(1, "payoff engine", 1, payoff_engine);
  criterion(2, "strategy oracles", 5, strategy_oracles);
  criterion(3, "BFI scoring", 0, bfi_scoring);
  criterion(4, "published profile replay", 0, published_replay);
  criterion(5, "prompt goldens", 0, prompt_goldens);
  criterion(6, "deterministic end-to-end", 10, end_to_end);
  criterion(7, "agreeableness steering", 30, agreeableness_dominates);
  criterion(8, "condition matrix + resume", 0, matrix_and_resume);
  criterion(9, "robustness", 0, robustness);
  fmt::print("{} of 9 criteria passed\n", 9 - failures);
  return failures;
}
