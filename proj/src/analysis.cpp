#include "coopsteer/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <tuple>

#include <fmt/format.h>

#include "coopsteer/text.hpp"

namespace coopsteer {

namespace {

int common_rounds(std::span<const MatchRecord> records) {
  if (records.empty()) throw EmptyGroup("no match records in group");
  const auto n = records.front().rounds.size();
  for (const auto& r : records) {
    if (r.rounds.size() != n) throw std::invalid_argument("records in a group differ in round count");
  }
  if (n == 0) throw EmptyGroup("records have no rounds");
  return static_cast<int>(n);
}

}  // namespace

double cooperation_rate(std::span<const MatchRecord> records) {
  const int rounds = common_rounds(records);
  long coop = 0;
  for (const auto& rec : records) {
    for (const auto& r : rec.rounds) coop += r.self_action == Action::Cooperate;
  }
  return static_cast<double>(coop) / (static_cast<double>(rounds) * static_cast<double>(records.size()));
}

double average_cumulative_payoff(std::span<const MatchRecord> records) {
  common_rounds(records);
  long total = 0;
  for (const auto& rec : records) total += cumulative_payoff(rec);
  return static_cast<double>(total) / static_cast<double>(records.size());
}

double normalized_payoff(std::span<const MatchRecord> records, const PayoffMatrix& m, int rounds) {
  if (rounds < 1) throw std::invalid_argument("rounds must be >= 1");
  if (common_rounds(records) != rounds) throw std::invalid_argument("records do not have the stated round count");
  return average_cumulative_payoff(records) / (static_cast<double>(rounds) * m.temptation());
}

GroupKey GroupKey::of(const ExperimentCondition& c) {
  return {c.model, c.experiment, c.manipulation, c.opponent};
}

bool operator<(const GroupKey& a, const GroupKey& b) {
  auto manip = [](const std::optional<Manipulation>& m) {
    return m ? std::pair{static_cast<int>(index_of(m->trait)), m->value} : std::pair{-1, 0};
  };
  auto opp = [](const std::optional<StrategyKind>& o) { return o ? static_cast<int>(*o) : -1; };
  return std::tuple(a.model, static_cast<int>(a.experiment), manip(a.manipulation), opp(a.opponent)) <
         std::tuple(b.model, static_cast<int>(b.experiment), manip(b.manipulation), opp(b.opponent));
}

std::vector<SummaryStats> summarize(const RunManifest& manifest, std::span<const MatchRecord> records,
                                    bool allow_partial) {
  std::map<std::string, std::vector<MatchRecord>> by_condition;
  for (const auto& rec : records) {
    const auto& cond = manifest.condition(rec.condition_id);
    if (cond.experiment == Experiment::E1_BFI) throw std::invalid_argument("match record under a BFI condition");
    by_condition[rec.condition_id].push_back(rec);
  }

  std::vector<SummaryStats> out;
  std::vector<std::string> empty;
  for (const auto& cond : manifest.conditions) {
    if (cond.experiment == Experiment::E1_BFI) continue;
    const auto it = by_condition.find(cond.id);
    if (it == by_condition.end()) {
      empty.push_back(cond.id + " " + cond.label());
      continue;
    }
    const auto& group = it->second;
    SummaryStats s;
    s.key = GroupKey::of(cond);
    s.n_matches = static_cast<int>(group.size());
    s.rounds = common_rounds(group);
    s.avg_cooperation_rate = cooperation_rate(group);
    s.avg_cumulative_payoff = average_cumulative_payoff(group);
    s.normalized_payoff = normalized_payoff(group, group.front().matrix, s.rounds);
    out.push_back(std::move(s));
  }
  if (!empty.empty() && !allow_partial) {
    std::string names;
    for (const auto& e : empty) names += "\n  " + e;
    throw EmptyGroup(fmt::format("{} condition(s) without completed matches:{}", empty.size(), names));
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.key < b.key; });
  return out;
}

DiffEntry difference(const SummaryStats& a, const SummaryStats& b) {
  DiffEntry d;
  d.model = a.key.model;
  if (a.key.manipulation) d.trait = a.key.manipulation->trait;
  if (a.key.opponent) d.opponent = *a.key.opponent;
  d.delta_cooperation = a.avg_cooperation_rate - b.avg_cooperation_rate;
  d.delta_payoff = a.avg_cumulative_payoff - b.avg_cumulative_payoff;
  d.delta_normalized_payoff = a.normalized_payoff - b.normalized_payoff;
  d.high = &a;
  d.low = &b;
  return d;
}

std::vector<DiffEntry> diff_table(std::span<const SummaryStats> stats) {
  using Cell = std::tuple<std::string, int, int>;  // model, trait, opponent
  std::map<Cell, std::array<const SummaryStats*, 2>> cells;
  for (const auto& s : stats) {
    if (s.key.experiment != Experiment::E3_manipulated) continue;
    const auto& m = *s.key.manipulation;
    auto& slot = cells[{s.key.model, static_cast<int>(index_of(m.trait)), static_cast<int>(*s.key.opponent)}];
    slot[m.value == 5 ? 0 : 1] = &s;
  }
  if (cells.empty()) throw MissingPair("no manipulated conditions to difference");

  std::vector<DiffEntry> out;
  std::string missing;
  for (const auto& [cell, pair] : cells) {
    const auto& [model, trait, opp] = cell;
    if (!pair[0] || !pair[1]) {
      missing += fmt::format("\n  {} {} vs {}: value {} missing", model, trait_letter(kTraitOrder[trait]),
                             strategy_name(static_cast<StrategyKind>(opp)), pair[0] ? 1 : 5);
      continue;
    }
    out.push_back(difference(*pair[0], *pair[1]));
  }
  if (!missing.empty()) throw MissingPair("unpaired manipulated conditions:" + missing);
  return out;
}

namespace {

std::string fmt6(double v) { return format_fixed(v, 6); }

}  // namespace

void write_summary_csv(std::ostream& out, std::span<const SummaryStats> stats) {
  out << "model,experiment,trait,value,opponent,n_matches,rounds,cooperation_rate,avg_cumulative_payoff,"
         "normalized_payoff\n";
  for (const auto& s : stats) {
    const auto& k = s.key;
    out << k.model << ',' << experiment_name(k.experiment) << ','
        << (k.manipulation ? trait_letter(k.manipulation->trait) : "") << ','
        << (k.manipulation ? std::to_string(k.manipulation->value) : "") << ','
        << (k.opponent ? strategy_name(*k.opponent) : "") << ',' << s.n_matches << ',' << s.rounds << ','
        << fmt6(s.avg_cooperation_rate) << ',' << fmt6(s.avg_cumulative_payoff) << ','
        << fmt6(s.normalized_payoff) << '\n';
  }
}

void write_diff_csv(std::ostream& out, std::span<const DiffEntry> diffs) {
  out << "model,trait,opponent,cooperation_5,cooperation_1,delta_cooperation,payoff_5,payoff_1,delta_payoff,"
         "delta_normalized_payoff\n";
  for (const auto& d : diffs) {
    out << d.model << ',' << trait_letter(d.trait) << ',' << strategy_name(d.opponent) << ','
        << fmt6(d.high->avg_cooperation_rate) << ',' << fmt6(d.low->avg_cooperation_rate) << ','
        << fmt6(d.delta_cooperation) << ',' << fmt6(d.high->avg_cumulative_payoff) << ','
        << fmt6(d.low->avg_cumulative_payoff) << ',' << fmt6(d.delta_payoff) << ','
        << fmt6(d.delta_normalized_payoff) << '\n';
  }
}

TraitStats human_reference() {
  static const TraitStats human =
      trait_stats_from_json(nlohmann::json::parse(read_file(data_dir() / "reference" / "human.json")));
  return human;
}

nlohmann::json export_radar(std::span<const std::pair<std::string, TraitStats>> models, const TraitStats& human) {
  if (models.empty()) throw std::invalid_argument("radar export needs at least one model");
  nlohmann::json series = nlohmann::json::array();
  auto add = [&](const std::string& label, const TraitStats& st) {
    std::array<double, 5> v{};
    std::array<double, 5> sd{};
    for (auto t : kTraitOrder) {
      v[index_of(t)] = st.mean[t];
      sd[index_of(t)] = st.sd[index_of(t)];
    }
    series.push_back({{"label", label}, {"values", v}, {"sd", sd}, {"n_runs", st.n_runs}});
  };
  for (const auto& [label, st] : models) add(label, st);
  add("Human", human);
  nlohmann::json axes = nlohmann::json::array();
  for (auto t : kTraitOrder) axes.push_back(trait_letter(t));
  return {{"axes", std::move(axes)}, {"scale", {1, 5}}, {"sd_convention", "population"}, {"series", std::move(series)}};
}

std::string render_radar_svg(const nlohmann::json& radar) {
  constexpr double cx = 220, cy = 210, radius = 160;
  static constexpr std::array<const char*, 6> kColours = {"#1f77b4", "#ff7f0e", "#2ca02c",
                                                          "#d62728", "#9467bd", "#444444"};
  const auto& axes = radar.at("axes");
  const auto n = axes.size();
  auto point = [&](std::size_t axis, double value) {
    const double angle = -std::numbers::pi / 2 + 2 * std::numbers::pi * static_cast<double>(axis) / n;
    const double r = radius * (value - 1.0) / 4.0;
    return std::pair{cx + r * std::cos(angle), cy + r * std::sin(angle)};
  };

  std::string svg = R"(<svg xmlns="http://www.w3.org/2000/svg" width="560" height="440" font-family="sans-serif" font-size="12">)";
  svg += "\n";
  for (int level = 1; level <= 5; ++level) {
    std::string pts;
    for (std::size_t a = 0; a < n; ++a) {
      const auto [x, y] = point(a, level);
      pts += fmt::format("{:.1f},{:.1f} ", x, y);
    }
    svg += fmt::format(R"(<polygon points="{}" fill="none" stroke="#cccccc"/>)", pts) + "\n";
  }
  for (std::size_t a = 0; a < n; ++a) {
    const auto [x, y] = point(a, 5.0);
    const auto [lx, ly] = point(a, 5.45);
    svg += fmt::format(R"(<line x1="{:.1f}" y1="{:.1f}" x2="{:.1f}" y2="{:.1f}" stroke="#cccccc"/>)", cx, cy, x, y);
    svg += fmt::format(R"(<text x="{:.1f}" y="{:.1f}" text-anchor="middle">{}</text>)", lx, ly + 4,
                       axes[a].get<std::string>()) + "\n";
  }
  std::size_t i = 0;
  for (const auto& s : radar.at("series")) {
    const auto colour = kColours[std::min(i, kColours.size() - 1)];
    std::string pts;
    const auto& values = s.at("values");
    for (std::size_t a = 0; a < n; ++a) {
      const auto [x, y] = point(a, values[a].get<double>());
      pts += fmt::format("{:.1f},{:.1f} ", x, y);
    }
    svg += fmt::format(R"(<polygon points="{}" fill="{}" fill-opacity="0.12" stroke="{}" stroke-width="2"/>)", pts,
                       colour, colour) + "\n";
    svg += fmt::format(R"(<text x="430" y="{}" fill="{}">{}</text>)", 30 + 18 * i, colour,
                       s.at("label").get<std::string>()) + "\n";
    ++i;
  }
  svg += "</svg>\n";
  return svg;
}

std::vector<std::pair<std::string, TraitStats>> bfi_stats_by_model(std::span<const BfiRunRecord> runs) {
  std::map<std::string, std::vector<TraitScores>> grouped;
  for (const auto& r : runs) grouped[r.model].push_back(r.scores);
  std::vector<std::pair<std::string, TraitStats>> out;
  for (const auto& [model, scores] : grouped) out.emplace_back(model, compute_trait_stats(scores));
  return out;
}

}  // namespace coopsteer
