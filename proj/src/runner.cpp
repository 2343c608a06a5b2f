#include "coopsteer/runner.hpp"

#include <condition_variable>
#include <fstream>
#include <mutex>
#include <thread>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "coopsteer/live_agent.hpp"
#include "coopsteer/seeds.hpp"
#include "coopsteer/strategy.hpp"
#include "coopsteer/text.hpp"

namespace coopsteer {

// ---------------------------------------------------------------- manifest

std::size_t RunManifest::total_trials() const {
  std::size_t n = 0;
  for (const auto& c : conditions) n += static_cast<std::size_t>(c.trials);
  return n;
}

std::size_t RunManifest::completed_trials() const {
  std::size_t n = 0;
  for (const auto& s : completed) n += s.size();
  return n;
}

std::size_t RunManifest::failed_trials() const {
  std::size_t n = 0;
  for (const auto& f : failed) n += f.size();
  return n;
}

std::optional<std::size_t> RunManifest::condition_index(std::string_view id) const {
  for (std::size_t i = 0; i < conditions.size(); ++i) {
    if (conditions[i].id == id) return i;
  }
  return std::nullopt;
}

const ExperimentCondition& RunManifest::condition(std::string_view id) const {
  const auto i = condition_index(id);
  if (!i) throw std::out_of_range("unknown condition " + std::string(id));
  return conditions[*i];
}

nlohmann::json RunManifest::to_json() const {
  nlohmann::json conds = nlohmann::json::array();
  for (std::size_t i = 0; i < conditions.size(); ++i) {
    auto cj = conditions[i].to_json();
    cj["completed"] = completed[i];
    nlohmann::json f = nlohmann::json::object();
    for (const auto& [trial, err] : failed[i]) f[std::to_string(trial)] = err;
    cj["failed"] = std::move(f);
    conds.push_back(std::move(cj));
  }
  return {{"schema_version", kManifestSchemaVersion},
          {"run_id", run_id},
          {"config_hash", config_hash},
          {"master_seed", master_seed},
          {"trials_per", "condition x opponent"},
          {"bfi_administration", "whole questionnaire in one message"},
          {"conditions", std::move(conds)}};
}

RunManifest RunManifest::from_json(const nlohmann::json& j) {
  if (j.value("schema_version", 0) != kManifestSchemaVersion) {
    throw std::invalid_argument("unsupported manifest schema_version");
  }
  RunManifest m;
  m.run_id = j.at("run_id").get<std::string>();
  m.config_hash = j.at("config_hash").get<std::string>();
  m.master_seed = j.at("master_seed").get<std::uint64_t>();
  for (const auto& cj : j.at("conditions")) {
    m.conditions.push_back(ExperimentCondition::from_json(cj));
    m.completed.push_back(cj.value("completed", std::set<int>{}));
    std::map<int, std::string> f;
    if (cj.contains("failed")) {
      for (const auto& [k, v] : cj["failed"].items()) f[std::stoi(k)] = v.get<std::string>();
    }
    m.failed.push_back(std::move(f));
  }
  return m;
}

void RunManifest::save(const std::filesystem::path& path) const {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << to_json().dump(2) << '\n';
    out.flush();
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

RunManifest RunManifest::load(const std::filesystem::path& path) {
  return from_json(nlohmann::json::parse(read_file(path)));
}

// ---------------------------------------------------------------- records

nlohmann::json BfiRunRecord::to_json() const {
  return {{"schema_version", kTranscriptSchemaVersion},
          {"condition_id", condition_id},
          {"model", model},
          {"trial", trial},
          {"ratings", responses.ratings},
          {"scores", coopsteer::to_json(scores)},
          {"raw_reply", responses.raw_reply},
          {"attempts", responses.attempt_count}};
}

BfiRunRecord BfiRunRecord::from_json(const nlohmann::json& j) {
  BfiRunRecord r;
  r.condition_id = j.at("condition_id").get<std::string>();
  r.model = j.at("model").get<std::string>();
  r.trial = j.at("trial").get<int>();
  r.responses.ratings = j.at("ratings").get<std::array<int, kBfiItemCount>>();
  r.responses.raw_reply = j.value("raw_reply", "");
  r.responses.attempt_count = j.value("attempts", 1);
  r.scores = trait_scores_from_json(j.at("scores"));
  return r;
}

namespace {

// Calls `fn` per complete line. A torn final line (no newline, left by a
// crash mid-write) is cut off the file when `repair` is set.
void for_each_jsonl(const std::filesystem::path& path, bool repair,
                    const std::function<void(const nlohmann::json&)>& fn) {
  if (!std::filesystem::exists(path)) return;
  const std::string text = read_file(path);
  std::size_t pos = 0;
  while (pos < text.size()) {
    const auto nl = text.find('\n', pos);
    if (nl == std::string::npos) {
      if (!repair) throw std::runtime_error(path.string() + ": truncated last line");
      spdlog::warn("{}: dropping torn final line", path.string());
      std::filesystem::resize_file(path, pos);
      return;
    }
    const std::string_view line(text.data() + pos, nl - pos);
    if (!line.empty()) fn(nlohmann::json::parse(line));
    pos = nl + 1;
  }
}

}  // namespace

std::vector<MatchRecord> load_transcripts(const std::filesystem::path& path) {
  std::vector<MatchRecord> out;
  for_each_jsonl(path, false, [&](const nlohmann::json& j) { out.push_back(match_record_from_json(j)); });
  return out;
}

std::vector<BfiRunRecord> load_bfi_runs(const std::filesystem::path& path) {
  std::vector<BfiRunRecord> out;
  for_each_jsonl(path, false, [&](const nlohmann::json& j) { out.push_back(BfiRunRecord::from_json(j)); });
  return out;
}

// ---------------------------------------------------------------- execution

std::string make_run_id(const RunConfig& config) { return "run-" + config.hash().substr(0, 12); }

std::uint64_t trial_seed(std::uint64_t master_seed, std::size_t condition_index, int trial) {
  return derive_seed(master_seed, {static_cast<std::uint64_t>(condition_index), static_cast<std::uint64_t>(trial)});
}

namespace {

constexpr const char* kFixtureTimestamp = "1970-01-01T00:00:00.000Z";

struct Task {
  std::size_t condition;
  int trial;
};

struct Outcome {
  bool bfi = false;
  std::string line;            // record to append on success
  std::optional<std::string> failure;
  std::exception_ptr fatal;
};

class AppendFile {
 public:
  explicit AppendFile(const std::filesystem::path& path) : out_(path, std::ios::app) {
    if (!out_) throw std::runtime_error("cannot append to " + path.string());
  }
  void write_line(const std::string& line) {
    out_ << line << '\n';
    out_.flush();
    if (!out_) throw std::runtime_error("append failed");
  }

 private:
  std::ofstream out_;
};

class Executor {
 public:
  Executor(const RunConfig& config, RunManifest& manifest, RunPaths paths, const RunOptions& options)
      : config_(config), manifest_(manifest), paths_(std::move(paths)), options_(options) {
    for (const auto& spec : config_.models) {
      limiters_[spec.model.name] =
          options_.clock ? std::make_shared<RateLimiter>(spec.model.rate_limit_rpm, options_.clock)
                         : std::make_shared<RateLimiter>(spec.model.rate_limit_rpm);
      if (spec.backend == Backend::Replay && !options_.agent_factory) {
        recordings_[spec.model.name] = ReplayAgent::load(spec.replay_file);
      }
      if (spec.backend == Backend::Live) needs_exchange_log_ = true;
    }
  }

  RunSummary run() {
    reconcile();

    std::vector<Task> tasks;
    for (std::size_t c = 0; c < manifest_.conditions.size(); ++c) {
      for (int t = 0; t < manifest_.conditions[c].trials; ++t) {
        if (!manifest_.completed[c].contains(t)) tasks.push_back({c, t});
      }
    }
    if (options_.max_trials > 0 && tasks.size() > options_.max_trials) tasks.resize(options_.max_trials);

    if (needs_exchange_log_) exchanges_ = std::make_unique<AppendFile>(paths_.exchanges());
    AppendFile transcripts(paths_.transcripts());
    AppendFile bfi(paths_.bfi_runs());
    AppendFile failures(paths_.failures());

    const int workers = std::max(1, std::min<int>(options_.parallelism.value_or(config_.parallelism),
                                                  static_cast<int>(tasks.size())));
    std::vector<std::optional<Outcome>> results(tasks.size());
    std::mutex mu;
    std::condition_variable ready;
    std::atomic<std::size_t> next{0};
    std::atomic<bool> abort{false};
    int active = 0;

    auto stopping = [&] { return abort.load() || (options_.stop && options_.stop->load()); };

    std::vector<std::thread> pool;
    if (!tasks.empty()) active = workers;
    for (int w = 0; w < active; ++w) {
      pool.emplace_back([&] {
        for (;;) {
          if (stopping()) break;
          const std::size_t i = next.fetch_add(1);
          if (i >= tasks.size()) break;
          Outcome out = execute(tasks[i]);
          std::lock_guard lock(mu);
          results[i] = std::move(out);
          ready.notify_all();
        }
        std::lock_guard lock(mu);
        --active;
        ready.notify_all();
      });
    }

    // Single writer: commits in task order so output does not depend on
    // scheduling.
    RunSummary summary;
    std::exception_ptr fatal;
    for (std::size_t i = 0; i < tasks.size(); ++i) {
      std::unique_lock lock(mu);
      ready.wait(lock, [&] { return results[i].has_value() || active == 0; });
      if (!results[i]) break;  // stopped before this task was picked up
      Outcome out = std::move(*results[i]);
      results[i].reset();
      lock.unlock();

      const auto& task = tasks[i];
      const auto& cond = manifest_.conditions[task.condition];
      if (out.fatal) {
        fatal = out.fatal;
        abort = true;
        break;
      }
      ++summary.executed;
      if (out.failure) {
        ++summary.failed;
        manifest_.failed[task.condition][task.trial] = *out.failure;
        failures.write_line(nlohmann::json{{"condition_id", cond.id}, {"trial", task.trial}, {"error", *out.failure}}.dump());
        spdlog::error("{} trial {} failed: {}", cond.label(), task.trial, *out.failure);
      } else {
        (out.bfi ? bfi : transcripts).write_line(out.line);
        manifest_.completed[task.condition].insert(task.trial);
        manifest_.failed[task.condition].erase(task.trial);
      }
      manifest_.save(paths_.manifest());
    }
    abort = true;
    for (auto& t : pool) t.join();
    manifest_.save(paths_.manifest());
    if (fatal) std::rethrow_exception(fatal);

    summary.run_id = manifest_.run_id;
    summary.dir = paths_.dir;
    summary.pending = manifest_.pending_trials();
    return summary;
  }

 private:
  // Trials already appended but not yet in the manifest (crash between the
  // two writes) count as completed.
  void reconcile() {
    auto mark = [&](const std::string& cid, int trial) {
      const auto idx = manifest_.condition_index(cid);
      if (!idx) throw std::runtime_error("transcript names unknown condition " + cid);
      manifest_.completed[*idx].insert(trial);
      manifest_.failed[*idx].erase(trial);
    };
    for_each_jsonl(paths_.transcripts(), true, [&](const nlohmann::json& j) {
      mark(j.at("condition_id").get<std::string>(), j.at("trial").get<int>());
    });
    for_each_jsonl(paths_.bfi_runs(), true, [&](const nlohmann::json& j) {
      mark(j.at("condition_id").get<std::string>(), j.at("trial").get<int>());
    });
    manifest_.save(paths_.manifest());
  }

  std::unique_ptr<ChatAgent> make_agent(const AgentSpec& spec) {
    if (options_.agent_factory) return options_.agent_factory(spec);
    switch (spec.backend) {
      case Backend::Scripted:
        return std::make_unique<ScriptedAgent>(spec.script);
      case Backend::Persona: {
        TraitScores native = TraitScores::uniform(3.0);
        if (spec.persona_profile) {
          native = *spec.persona_profile;
        } else if (auto it = config_.profiles.find(spec.model.name); it != config_.profiles.end()) {
          native = it->second;
        }
        return std::make_unique<ParametricPersonaAgent>(native);
      }
      case Backend::Replay:
        return std::make_unique<ReplayAgent>(recordings_.at(spec.model.name));
      case Backend::Live: {
        ExchangeSink sink = [this](const nlohmann::json& j) {
          std::lock_guard lock(exchange_mu_);
          exchanges_->write_line(j.dump());
        };
        return std::make_unique<LiveAgent>(spec.model, limiters_.at(spec.model.name), std::move(sink));
      }
    }
    throw std::logic_error("unknown backend");
  }

  Outcome execute(const Task& task) {
    Outcome out;
    try {
      const auto& cond = manifest_.conditions[task.condition];
      const auto& spec = config_.agent(cond.model);
      const auto seed = trial_seed(manifest_.master_seed, task.condition, task.trial);
      auto agent = make_agent(spec);

      if (cond.experiment == Experiment::E1_BFI) {
        AdministrationOptions opt;
        opt.max_attempts = config_.bfi_max_attempts;
        opt.key_prefix = "bfi/" + cond.model;
        if (options_.sleep) opt.sleep = options_.sleep;
        BfiRunRecord rec;
        rec.condition_id = cond.id;
        rec.model = cond.model;
        rec.trial = task.trial;
        rec.responses = administer_bfi_run(*agent, task.trial + 1, seed, opt);
        rec.scores = score_bfi(rec.responses);
        out.bfi = true;
        out.line = rec.to_json().dump();
        return out;
      }

      LlmMatchAgent::Setup setup;
      setup.rounds = cond.rounds;
      setup.matrix = config_.payoff;
      setup.profile = cond.personality();
      setup.replay_prefix = fmt::format("{}/t{}", cond.id, task.trial);
      setup.retry.max_retries = spec.model.max_retries;
      if (options_.sleep) setup.retry.sleep = options_.sleep;
      LlmMatchAgent player(*agent, std::move(setup));
      auto opponent = make_strategy(*cond.opponent, 0);

      MatchSettings ms;
      ms.rounds = cond.rounds;
      ms.matrix = config_.payoff;
      ms.seed = seed;
      ms.match_id = fmt::format("{}-t{:03d}", cond.id, task.trial);
      ms.condition_id = cond.id;
      ms.trial = task.trial;
      if (config_.fixture_mode) ms.clock = [] { return std::string(kFixtureTimestamp); };
      auto rec = run_match(player, *opponent, ms);
      rec.system_prompt = player.system_prompt();
      out.line = to_json(rec).dump();
    } catch (const AgentFailure& e) {
      out.failure = e.what();
    } catch (const MeasurementFailure& e) {
      out.failure = e.what();
    } catch (...) {
      out.fatal = std::current_exception();
    }
    return out;
  }

  const RunConfig& config_;
  RunManifest& manifest_;
  RunPaths paths_;
  const RunOptions& options_;
  std::map<std::string, std::shared_ptr<RateLimiter>> limiters_;
  std::map<std::string, std::shared_ptr<const ReplayAgent::Recordings>> recordings_;
  bool needs_exchange_log_ = false;
  std::mutex exchange_mu_;
  std::unique_ptr<AppendFile> exchanges_;
};

RunConfig with_absolute_paths(RunConfig config) {
  for (auto& m : config.models) {
    if (!m.replay_file.empty()) m.replay_file = std::filesystem::absolute(m.replay_file).lexically_normal();
  }
  config.output_dir = std::filesystem::absolute(config.output_dir).lexically_normal();
  return config;
}

}  // namespace

RunSummary start_run(const RunConfig& input, const RunOptions& options) {
  const RunConfig config = with_absolute_paths(input);
  RunManifest manifest;
  manifest.run_id = make_run_id(config);
  manifest.config_hash = config.hash();
  manifest.master_seed = config.master_seed;
  manifest.conditions = build_conditions(config);
  manifest.completed.resize(manifest.conditions.size());
  manifest.failed.resize(manifest.conditions.size());

  RunPaths paths{config.output_dir / manifest.run_id};
  if (std::filesystem::exists(paths.manifest())) {
    throw std::runtime_error(paths.dir.string() + " already exists; resume it instead");
  }
  std::filesystem::create_directories(paths.dir);
  {
    std::ofstream out(paths.config());
    out << config.to_json().dump(2) << '\n';
  }
  manifest.save(paths.manifest());
  spdlog::info("run {}: {} conditions, {} trials", manifest.run_id, manifest.conditions.size(),
               manifest.total_trials());
  return Executor(config, manifest, paths, options).run();
}

RunSummary resume_run(const std::filesystem::path& run_dir, const RunOptions& options) {
  RunPaths paths{run_dir};
  RunManifest manifest = RunManifest::load(paths.manifest());
  const RunConfig config = RunConfig::from_json(nlohmann::json::parse(read_file(paths.config())));
  if (config.hash() != manifest.config_hash) {
    throw std::runtime_error(run_dir.string() + ": config.json does not match the manifest hash");
  }
  spdlog::info("resuming {}: {} of {} trials done", manifest.run_id, manifest.completed_trials(),
               manifest.total_trials());
  return Executor(config, manifest, paths, options).run();
}

}  // namespace coopsteer
