#pragma once

#include <array>
#include <atomic>
#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "coopsteer/agent.hpp"
#include "coopsteer/bfi.hpp"
#include "coopsteer/config.hpp"
#include "coopsteer/rate_limiter.hpp"

namespace coopsteer {

inline constexpr int kManifestSchemaVersion = 1;

/// Progress of one run. Conditions are stored by value so a run can be
/// analysed without its config.
struct RunManifest {
  std::string run_id;
  std::string config_hash;
  std::uint64_t master_seed = 0;
  std::vector<ExperimentCondition> conditions;
  std::vector<std::set<int>> completed;               // per condition
  std::vector<std::map<int, std::string>> failed;     // per condition: trial -> error

  std::size_t total_trials() const;
  std::size_t completed_trials() const;
  std::size_t failed_trials() const;
  std::size_t pending_trials() const { return total_trials() - completed_trials(); }
  const ExperimentCondition& condition(std::string_view id) const;
  std::optional<std::size_t> condition_index(std::string_view id) const;

  nlohmann::json to_json() const;
  static RunManifest from_json(const nlohmann::json& j);
  // Writes a temp file next to `path` and renames it over.
  void save(const std::filesystem::path& path) const;
  static RunManifest load(const std::filesystem::path& path);
};

struct RunPaths {
  std::filesystem::path dir;
  std::filesystem::path manifest() const { return dir / "manifest.json"; }
  std::filesystem::path config() const { return dir / "config.json"; }
  std::filesystem::path transcripts() const { return dir / "transcripts.jsonl"; }
  std::filesystem::path bfi_runs() const { return dir / "bfi_runs.jsonl"; }
  std::filesystem::path failures() const { return dir / "failures.jsonl"; }
  std::filesystem::path exchanges() const { return dir / "exchanges.jsonl"; }
};

/// One questionnaire administration from an E1 condition.
struct BfiRunRecord {
  std::string condition_id;
  std::string model;
  int trial = 0;
  BfiResponseSet responses;
  TraitScores scores;

  nlohmann::json to_json() const;
  static BfiRunRecord from_json(const nlohmann::json& j);
};

using AgentFactory = std::function<std::unique_ptr<ChatAgent>(const AgentSpec& spec)>;

struct RunOptions {
  // Stop after this many newly executed trials (0 = no limit).
  std::size_t max_trials = 0;
  // Overrides the config's parallelism when set.
  std::optional<int> parallelism;
  // Checked between trials; set from a signal handler to stop cleanly.
  const std::atomic<bool>* stop = nullptr;
  // Clock for the per-model rate limiters.
  std::shared_ptr<Clock> clock;
  // Backoff sleep for transport retries.
  std::function<void(std::chrono::milliseconds)> sleep;
  // Replaces the backend construction from the config (tests).
  AgentFactory agent_factory;
};

struct RunSummary {
  std::string run_id;
  std::filesystem::path dir;
  std::size_t executed = 0;  // trials run by this call
  std::size_t failed = 0;    // of those, how many failed
  std::size_t pending = 0;   // still not completed afterwards
};

// "run-" + first 12 hex digits of the config hash.
std::string make_run_id(const RunConfig& config);

// The trial's seed: derive_seed(master, {condition index, trial}).
std::uint64_t trial_seed(std::uint64_t master_seed, std::size_t condition_index, int trial);

/// Creates <output_dir>/<run_id>/ and runs every trial. Throws if the
/// directory already holds a manifest (use resume_run).
RunSummary start_run(const RunConfig& config, const RunOptions& options = {});

/// Continues a run from its directory: trials recorded in the manifest or
/// present in the transcript files are skipped; failed trials are retried.
RunSummary resume_run(const std::filesystem::path& run_dir, const RunOptions& options = {});

std::vector<MatchRecord> load_transcripts(const std::filesystem::path& path);
std::vector<BfiRunRecord> load_bfi_runs(const std::filesystem::path& path);

}  // namespace coopsteer
