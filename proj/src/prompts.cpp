#include "coopsteer/prompts.hpp"

#include <stdexcept>

#include <fmt/format.h>

#include "coopsteer/text.hpp"

namespace coopsteer {

namespace {

// Trait order of the rendered personality block.
constexpr std::array<Trait, 5> kProfileOrder = {Trait::Extraversion, Trait::Agreeableness,
                                                Trait::Conscientiousness, Trait::Neuroticism,
                                                Trait::Openness};

std::string points(int value) { return fmt::format("{} {}", value, value == 1 ? "point" : "points"); }

}  // namespace

PromptTemplates PromptTemplates::load(const std::filesystem::path& dir) {
  PromptTemplates t;
  t.bfi_questionnaire = read_text_file(dir / "bfi_questionnaire.txt");
  t.game_context = read_text_file(dir / "game_context.txt");
  t.history_first_round = read_text_file(dir / "history_first_round.txt");
  t.history = read_text_file(dir / "history.txt");
  t.history_round = read_text_file(dir / "history_round.txt");
  t.personality_profile = read_text_file(dir / "personality_profile.txt");
  t.elicitation_suffix = read_text_file(dir / "elicitation_suffix.txt");
  t.format_reminder = read_text_file(dir / "format_reminder.txt");

  const auto j = nlohmann::json::parse(read_file(dir / "trait_descriptions.json"));
  const auto bounds = j.at("bucket_lower_bounds").get<std::vector<double>>();
  if (bounds.size() != 5 || bounds.front() != 1.0) {
    throw std::runtime_error("trait_descriptions.json: expected five buckets starting at 1.0");
  }
  for (std::size_t i = 0; i < 5; ++i) {
    t.bucket_lower_bounds[i] = bounds[i];
    if (i > 0 && !(bounds[i] > bounds[i - 1])) {
      throw std::runtime_error("trait_descriptions.json: bucket bounds must increase");
    }
  }
  for (auto trait : kTraitOrder) {
    const auto texts = j.at("descriptions").at(std::string(trait_letter(trait))).get<std::vector<std::string>>();
    if (texts.size() != 5) {
      throw std::runtime_error(fmt::format("trait_descriptions.json: {} needs 5 texts", trait_name(trait)));
    }
    for (std::size_t i = 0; i < 5; ++i) t.descriptions[index_of(trait)][i] = texts[i];
  }
  return t;
}

const PromptTemplates& default_templates() {
  static const PromptTemplates templates = PromptTemplates::load(data_dir() / "templates");
  return templates;
}

HistoryView::HistoryView(std::span<const RoundOutcome> rounds) : rounds_(rounds.begin(), rounds.end()) {
  for (std::size_t i = 0; i < rounds_.size(); ++i) {
    const auto& r = rounds_[i];
    if (r.round_index != static_cast<int>(i) + 1) {
      throw std::invalid_argument("history rounds must be numbered consecutively from 1");
    }
    self_c_ += r.self_action == Action::Cooperate;
    opp_c_ += r.opponent_action == Action::Cooperate;
    self_total_ += r.self_payoff;
    opp_total_ += r.opponent_payoff;
  }
}

double HistoryView::opponent_defection_rate() const {
  return empty() ? 0.0 : static_cast<double>(opponent_defections()) / completed();
}

std::string render_game_context(int iterations, const PayoffMatrix& m, const PromptTemplates& t) {
  if (iterations < 1) throw std::invalid_argument("iterations must be >= 1");
  return substitute(t.game_context, {
                                        {"CC_SELF", points(m.reward())},
                                        {"CC_OPP", points(m.reward())},
                                        {"CD_SELF", points(m.sucker())},
                                        {"CD_OPP", points(m.temptation())},
                                        {"DC_SELF", points(m.temptation())},
                                        {"DC_OPP", points(m.sucker())},
                                        {"DD_SELF", points(m.punishment())},
                                        {"DD_OPP", points(m.punishment())},
                                        {"ITERATIONS", std::to_string(iterations)},
                                    });
}

std::string render_history(const HistoryView& h, const PromptTemplates& t) {
  if (h.empty()) return t.history_first_round;

  std::string lines;
  for (const auto& r : h.rounds()) {
    if (!lines.empty()) lines += '\n';
    lines += substitute(t.history_round, {
                                             {"ROUND", std::to_string(r.round_index)},
                                             {"SELF_ACTION", std::string(to_string(r.self_action))},
                                             {"OPP_ACTION", std::string(to_string(r.opponent_action))},
                                             {"SELF_POINTS", std::to_string(r.self_payoff)},
                                             {"OPP_POINTS", std::to_string(r.opponent_payoff)},
                                         });
  }
  return substitute(t.history, {
                                   {"N", std::to_string(h.completed())},
                                   {"ROUND_LINES", lines},
                                   {"SELF_COOPERATE", std::to_string(h.self_cooperations())},
                                   {"SELF_DEFECT", std::to_string(h.self_defections())},
                                   {"OPP_COOPERATE", std::to_string(h.opponent_cooperations())},
                                   {"OPP_DEFECT", std::to_string(h.opponent_defections())},
                                   {"SELF_TOTAL", std::to_string(h.self_total())},
                                   {"OPP_TOTAL", std::to_string(h.opponent_total())},
                                   {"CURRENT_ROUND", std::to_string(h.current_round())},
                               });
}

int bucket_index(double score, const PromptTemplates& t) {
  if (!(score >= 1.0 && score <= 5.0)) {
    throw std::out_of_range(fmt::format("score {} outside [1, 5]", score));
  }
  int idx = 0;
  for (int i = 1; i < 5; ++i) {
    if (score >= t.bucket_lower_bounds[i]) idx = i;
  }
  return idx;
}

const std::string& bucket_description(Trait trait, double score, const PromptTemplates& t) {
  return t.descriptions[index_of(trait)][bucket_index(score, t)];
}

PersonalityProfile PersonalityProfile::measured(const TraitScores& scores, const PromptTemplates& t) {
  scores.validate();
  PersonalityProfile p;
  p.scores = scores;
  for (auto trait : kTraitOrder) p.descriptions[index_of(trait)] = bucket_description(trait, scores[trait], t);
  return p;
}

PersonalityProfile PersonalityProfile::manipulated(const TraitScores& base, Manipulation m,
                                                   const PromptTemplates& t) {
  if (m.value != 1 && m.value != 5) throw std::invalid_argument("manipulated value must be 1 or 5");
  TraitScores scores = base;
  scores[m.trait] = m.value;
  PersonalityProfile p = measured(scores, t);
  p.manipulation = m;
  return p;
}

std::string render_personality_prompt(const PersonalityProfile& p, const PromptTemplates& t) {
  std::map<std::string, std::string> values;
  std::string list = "[";
  for (auto trait : kProfileOrder) {
    const std::string letter(trait_letter(trait));
    const std::string score = format_fixed(p.scores[trait], 1);
    if (list.size() > 1) list += ", ";
    list += score;
    values[letter + "_SCORE"] = score;
    values[letter + "_DESCRIPTION"] = p.descriptions[index_of(trait)];
  }
  values["SCORE_LIST"] = list + "]";
  return substitute(t.personality_profile, values);
}

}  // namespace coopsteer
