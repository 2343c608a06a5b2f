#include "coopsteer/config.hpp"

#include <fmt/format.h>

#include "coopsteer/text.hpp"

namespace coopsteer {

std::string_view experiment_name(Experiment e) {
  switch (e) {
    case Experiment::E1_BFI: return "E1_BFI";
    case Experiment::E2_baseline: return "E2_baseline";
    case Experiment::E2_informed: return "E2_informed";
    case Experiment::E3_manipulated: return "E3_manipulated";
  }
  throw std::logic_error("unknown experiment");
}

Experiment experiment_from_name(std::string_view name) {
  for (auto e : {Experiment::E1_BFI, Experiment::E2_baseline, Experiment::E2_informed,
                 Experiment::E3_manipulated}) {
    if (experiment_name(e) == name) return e;
  }
  throw std::invalid_argument("unknown experiment: " + std::string(name));
}

std::string_view backend_name(Backend b) {
  switch (b) {
    case Backend::Live: return "live";
    case Backend::Scripted: return "scripted";
    case Backend::Persona: return "persona";
    case Backend::Replay: return "replay";
  }
  throw std::logic_error("unknown backend");
}

Backend backend_from_name(std::string_view name) {
  for (auto b : {Backend::Live, Backend::Scripted, Backend::Persona, Backend::Replay}) {
    if (backend_name(b) == name) return b;
  }
  throw std::invalid_argument("unknown backend: " + std::string(name));
}

const AgentSpec& RunConfig::agent(std::string_view model_name) const {
  for (const auto& a : models) {
    if (a.model.name == model_name) return a;
  }
  throw std::invalid_argument("no model named " + std::string(model_name));
}

std::map<std::string, TraitScores> load_profile_file(const std::filesystem::path& path) {
  const auto j = nlohmann::json::parse(read_file(path));
  std::map<std::string, TraitScores> out;
  for (const auto& [name, entry] : j.at("models").items()) {
    out[name] = trait_scores_from_json(entry.contains("mean") ? entry.at("mean") : entry);
  }
  return out;
}

namespace {

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_relative() && !base.empty() ? base / path : path;
}

}  // namespace

RunConfig RunConfig::from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  RunConfig c;
  for (const auto& m : j.at("models")) {
    AgentSpec spec;
    spec.backend = backend_from_name(m.value("backend", "live"));
    nlohmann::json model_json = m;
    // Offline backends carry a nominal sampling mode so ModelConfig validates.
    if (spec.backend != Backend::Live && !m.contains("temperature") && !m.contains("reasoning_effort")) {
      model_json["temperature"] = 0.7;
    }
    spec.model = ModelConfig::from_json(model_json);
    if (m.contains("script")) spec.script = m["script"].get<std::vector<std::string>>();
    if (m.contains("persona_profile")) spec.persona_profile = trait_scores_from_json(m["persona_profile"]);
    if (m.contains("replay_file")) spec.replay_file = resolve(base_dir, m["replay_file"].get<std::string>());

    if (spec.backend == Backend::Scripted && spec.script.empty()) {
      throw std::invalid_argument(spec.model.name + ": scripted backend needs a non-empty \"script\"");
    }
    if (spec.backend == Backend::Replay && spec.replay_file.empty()) {
      throw std::invalid_argument(spec.model.name + ": replay backend needs \"replay_file\"");
    }
    c.models.push_back(std::move(spec));
  }
  if (c.models.empty()) throw std::invalid_argument("config lists no models");

  for (const auto& e : j.at("experiments")) c.experiments.push_back(experiment_from_name(e.get<std::string>()));
  if (j.contains("opponents")) {
    c.opponents.clear();
    for (const auto& o : j["opponents"]) c.opponents.push_back(strategy_from_name(o.get<std::string>()));
  }
  c.trials = j.value("trials", c.trials);
  c.rounds = j.value("rounds", c.rounds);
  if (j.contains("payoff")) {
    const auto& p = j["payoff"];
    c.payoff = PayoffMatrix(p.at("T").get<int>(), p.at("R").get<int>(), p.at("P").get<int>(), p.at("S").get<int>());
  }
  c.master_seed = j.value("master_seed", c.master_seed);
  if (j.contains("output_dir")) c.output_dir = resolve(base_dir, j["output_dir"].get<std::string>());
  c.fixture_mode = j.value("fixture_mode", c.fixture_mode);
  c.parallelism = j.value("parallelism", c.parallelism);
  c.bfi_runs = j.value("bfi_runs", c.bfi_runs);
  c.bfi_max_attempts = j.value("bfi_max_attempts", c.bfi_max_attempts);

  if (j.contains("profiles_file")) {
    c.profiles = load_profile_file(resolve(base_dir, j["profiles_file"].get<std::string>()));
  }
  if (j.contains("profiles")) {
    for (const auto& [name, scores] : j["profiles"].items()) c.profiles[name] = trait_scores_from_json(scores);
  }

  if (c.trials < 1 || c.rounds < 1) throw std::invalid_argument("trials and rounds must be >= 1");
  if (c.parallelism < 1) throw std::invalid_argument("parallelism must be >= 1");
  if (c.bfi_runs < 1 || c.bfi_max_attempts < 1) throw std::invalid_argument("bfi_runs and bfi_max_attempts must be >= 1");
  if (c.fixture_mode) {
    for (const auto& m : c.models) {
      if (m.backend == Backend::Live) {
        throw std::invalid_argument("fixture_mode forbids live backend for " + m.model.name);
      }
    }
  }
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  return from_json(nlohmann::json::parse(read_file(path)), path.parent_path());
}

nlohmann::json RunConfig::to_json() const {
  nlohmann::json models_json = nlohmann::json::array();
  for (const auto& m : models) {
    auto mj = m.model.to_json();
    mj["backend"] = backend_name(m.backend);
    if (!m.script.empty()) mj["script"] = m.script;
    if (m.persona_profile) mj["persona_profile"] = coopsteer::to_json(*m.persona_profile);
    if (!m.replay_file.empty()) mj["replay_file"] = m.replay_file.string();
    models_json.push_back(std::move(mj));
  }
  nlohmann::json exps = nlohmann::json::array();
  for (auto e : experiments) exps.push_back(experiment_name(e));
  nlohmann::json opps = nlohmann::json::array();
  for (auto o : opponents) opps.push_back(strategy_name(o));
  nlohmann::json profs = nlohmann::json::object();
  for (const auto& [name, s] : profiles) profs[name] = coopsteer::to_json(s);
  return {
      {"models", std::move(models_json)},
      {"experiments", std::move(exps)},
      {"opponents", std::move(opps)},
      {"trials", trials},
      {"rounds", rounds},
      {"payoff", {{"T", payoff.temptation()}, {"R", payoff.reward()}, {"P", payoff.punishment()}, {"S", payoff.sucker()}}},
      {"master_seed", master_seed},
      {"output_dir", output_dir.string()},
      {"fixture_mode", fixture_mode},
      {"parallelism", parallelism},
      {"bfi_runs", bfi_runs},
      {"bfi_max_attempts", bfi_max_attempts},
      {"profiles", std::move(profs)},
  };
}

std::string RunConfig::hash() const {
  auto j = to_json();
  // Where outputs go and how many workers run them do not change results.
  j.erase("output_dir");
  j.erase("parallelism");
  return sha256_hex(j.dump());
}

void ExperimentCondition::validate() const {
  auto fail = [&](std::string_view why) {
    throw std::invalid_argument(fmt::format("condition {} ({}): {}", id, experiment_name(experiment), why));
  };
  if (trials < 1 || rounds < 1) fail("trials and rounds must be >= 1");
  switch (experiment) {
    case Experiment::E1_BFI:
      if (opponent || manipulation || base_profile) fail("E1 takes no opponent, manipulation or profile");
      break;
    case Experiment::E2_baseline:
      if (!opponent) fail("missing opponent");
      if (manipulation || base_profile) fail("baseline takes neither manipulation nor profile");
      break;
    case Experiment::E2_informed:
      if (!opponent) fail("missing opponent");
      if (!base_profile || manipulation) fail("informed needs a base profile and no manipulation");
      break;
    case Experiment::E3_manipulated:
      if (!opponent) fail("missing opponent");
      if (!base_profile || !manipulation) fail("manipulated needs a base profile and one manipulation");
      if (manipulation->value != 1 && manipulation->value != 5) fail("manipulated value must be 1 or 5");
      break;
  }
}

std::optional<PersonalityProfile> ExperimentCondition::personality() const {
  if (!base_profile) return std::nullopt;
  if (manipulation) return PersonalityProfile::manipulated(*base_profile, *manipulation);
  return PersonalityProfile::measured(*base_profile);
}

std::string ExperimentCondition::label() const {
  std::string s = fmt::format("{} {}", model, experiment_name(experiment));
  if (manipulation) s += fmt::format(" {}={}", trait_letter(manipulation->trait), manipulation->value);
  if (opponent) s += fmt::format(" vs {}", strategy_name(*opponent));
  return s;
}

nlohmann::json ExperimentCondition::to_json() const {
  nlohmann::json j = {{"id", id},
                      {"experiment", experiment_name(experiment)},
                      {"model", model},
                      {"trials", trials},
                      {"rounds", rounds}};
  j["opponent"] = opponent ? nlohmann::json(strategy_name(*opponent)) : nlohmann::json(nullptr);
  j["manipulation"] = manipulation ? nlohmann::json{{"trait", trait_letter(manipulation->trait)},
                                                    {"value", manipulation->value}}
                                   : nlohmann::json(nullptr);
  j["base_profile"] = base_profile ? coopsteer::to_json(*base_profile) : nlohmann::json(nullptr);
  return j;
}

ExperimentCondition ExperimentCondition::from_json(const nlohmann::json& j) {
  ExperimentCondition c;
  c.id = j.at("id").get<std::string>();
  c.experiment = experiment_from_name(j.at("experiment").get<std::string>());
  c.model = j.at("model").get<std::string>();
  c.trials = j.at("trials").get<int>();
  c.rounds = j.at("rounds").get<int>();
  if (!j.at("opponent").is_null()) c.opponent = strategy_from_name(j["opponent"].get<std::string>());
  if (!j.at("manipulation").is_null()) {
    c.manipulation = Manipulation{trait_from_string(j["manipulation"].at("trait").get<std::string>()),
                                  j["manipulation"].at("value").get<int>()};
  }
  if (!j.at("base_profile").is_null()) c.base_profile = trait_scores_from_json(j["base_profile"]);
  c.validate();
  return c;
}

std::vector<ExperimentCondition> build_conditions(const RunConfig& config) {
  std::vector<ExperimentCondition> out;
  auto push = [&](ExperimentCondition c) {
    c.id = fmt::format("c{:03d}", out.size());
    c.validate();
    out.push_back(std::move(c));
  };
  auto base_profile = [&](const std::string& model, Experiment e) {
    const auto it = config.profiles.find(model);
    if (it == config.profiles.end()) {
      throw MissingProfile(fmt::format("{} needs a base profile for model {}", experiment_name(e), model));
    }
    return it->second;
  };

  for (const auto& spec : config.models) {
    const auto& model = spec.model.name;
    for (auto e : config.experiments) {
      ExperimentCondition proto;
      proto.experiment = e;
      proto.model = model;
      proto.trials = config.trials;
      proto.rounds = config.rounds;
      switch (e) {
        case Experiment::E1_BFI:
          proto.trials = config.bfi_runs;
          push(proto);
          break;
        case Experiment::E2_baseline:
        case Experiment::E2_informed:
          if (e == Experiment::E2_informed) proto.base_profile = base_profile(model, e);
          for (auto opp : config.opponents) {
            proto.opponent = opp;
            push(proto);
          }
          break;
        case Experiment::E3_manipulated:
          proto.base_profile = base_profile(model, e);
          for (auto trait : kTraitOrder) {
            for (int value : {1, 5}) {
              proto.manipulation = Manipulation{trait, value};
              for (auto opp : config.opponents) {
                proto.opponent = opp;
                push(proto);
              }
            }
          }
          break;
      }
    }
  }
  return out;
}

}  // namespace coopsteer
