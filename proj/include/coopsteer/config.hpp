#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "coopsteer/game.hpp"
#include "coopsteer/live_agent.hpp"
#include "coopsteer/prompts.hpp"
#include "coopsteer/strategy.hpp"
#include "coopsteer/traits.hpp"

namespace coopsteer {

enum class Experiment : std::uint8_t { E1_BFI, E2_baseline, E2_informed, E3_manipulated };

std::string_view experiment_name(Experiment e);
Experiment experiment_from_name(std::string_view name);

enum class Backend : std::uint8_t { Live, Scripted, Persona, Replay };
std::string_view backend_name(Backend b);
Backend backend_from_name(std::string_view name);

/// One entry of the config's "models" list: which backend plays the agent
/// and, for live backends, how to reach it.
struct AgentSpec {
  ModelConfig model;
  Backend backend = Backend::Live;
  std::vector<std::string> script;             // scripted replies
  std::optional<TraitScores> persona_profile;  // persona native profile
  std::filesystem::path replay_file;           // replay recordings (JSONL)
};

struct RunConfig {
  std::vector<AgentSpec> models;
  std::vector<Experiment> experiments;
  std::vector<StrategyKind> opponents{kAllStrategies.begin(), kAllStrategies.end()};
  int trials = 100;  // per (condition, opponent) cell
  int rounds = 10;
  PayoffMatrix payoff;
  std::uint64_t master_seed = 0;
  std::filesystem::path output_dir = "runs";
  // No live backends, fixed timestamps: two runs of one config are byte-identical.
  bool fixture_mode = false;
  int parallelism = 1;
  int bfi_runs = 20;
  int bfi_max_attempts = 5;
  // Base profiles for informed / manipulated conditions, by model name.
  std::map<std::string, TraitScores> profiles;

  const AgentSpec& agent(std::string_view model_name) const;

  // Relative paths inside `j` resolve against `base_dir`.
  static RunConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
  static RunConfig load(const std::filesystem::path& path);
  nlohmann::json to_json() const;
  // sha256 of the canonical JSON dump.
  std::string hash() const;
};

// {"models": {name: {"mean": {"O": ..}, ...}}} as written by measure-bfi and
// shipped in data/reference/model_profiles.json.
std::map<std::string, TraitScores> load_profile_file(const std::filesystem::path& path);

class MissingProfile : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One cell of the condition matrix.
struct ExperimentCondition {
  std::string id;  // opaque, "c000", "c001", ...
  Experiment experiment = Experiment::E2_baseline;
  std::string model;
  std::optional<StrategyKind> opponent;  // absent for E1
  std::optional<Manipulation> manipulation;
  int trials = 100;
  int rounds = 10;
  std::optional<TraitScores> base_profile;

  // Throws std::invalid_argument when the experiment's field pattern is violated.
  void validate() const;
  // The profile sent to the agent (null for baseline / E1).
  std::optional<PersonalityProfile> personality() const;
  // Human-readable, for logs and reports only.
  std::string label() const;

  nlohmann::json to_json() const;
  static ExperimentCondition from_json(const nlohmann::json& j);
};

/// Expands the config into conditions, ordered model, experiment,
/// manipulation (trait order O C E A N, value 1 then 5), opponent.
/// E1: one per model. E2: 2 x opponents per model. E3: 10 x opponents per model.
/// Throws MissingProfile when an informed or manipulated condition has no base profile.
std::vector<ExperimentCondition> build_conditions(const RunConfig& config);

}  // namespace coopsteer
