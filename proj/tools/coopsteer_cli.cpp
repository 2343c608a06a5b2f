// Command-line front end: measure-bfi, run, resume, status, analyze.

#include <atomic>
#include <csignal>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "coopsteer/analysis.hpp"
#include "coopsteer/config.hpp"
#include "coopsteer/runner.hpp"
#include "coopsteer/text.hpp"

namespace fs = std::filesystem;
using namespace coopsteer;

namespace {

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop = true; }

enum Exit { kOk = 0, kError = 1, kAnalysis = 2, kTrialFailures = 3 };

fs::path resolve_run(const std::string& run, const fs::path& runs_dir) {
  if (fs::exists(fs::path(run) / "manifest.json")) return run;
  if (fs::exists(runs_dir / run / "manifest.json")) return runs_dir / run;
  throw std::runtime_error("no run found at " + run + " or " + (runs_dir / run).string());
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

int report_run(const RunSummary& s) {
  fmt::print("{}: executed {} trial(s), {} failed, {} pending\n  {}\n", s.run_id, s.executed, s.failed, s.pending,
             s.dir.string());
  return s.failed > 0 ? kTrialFailures : kOk;
}

RunOptions run_options(std::optional<int> parallelism, std::size_t max_trials) {
  RunOptions o;
  o.stop = &g_stop;
  o.parallelism = parallelism;
  o.max_trials = max_trials;
  return o;
}

// bfi_stats.json (profile-file shape) and bfi_runs.csv next to the run.
void write_bfi_summary(const fs::path& run_dir) {
  const auto runs = load_bfi_runs(RunPaths{run_dir}.bfi_runs());
  nlohmann::json models = nlohmann::json::object();
  for (const auto& [model, st] : bfi_stats_by_model(runs)) models[model] = to_json(st);
  write_file(run_dir / "bfi_stats.json", nlohmann::json{{"models", models}}.dump(2) + "\n");

  std::string csv = "model,trial,attempts,O,C,E,A,N\n";
  for (const auto& r : runs) {
    csv += fmt::format("{},{},{}", r.model, r.trial, r.responses.attempt_count);
    for (auto t : kTraitOrder) csv += "," + format_fixed(r.scores[t], 6);
    csv += "\n";
  }
  write_file(run_dir / "bfi_runs.csv", csv);
  for (const auto& [model, st] : bfi_stats_by_model(runs)) {
    std::string line = fmt::format("{:<16}", model);
    for (auto t : kTraitOrder) {
      line += fmt::format(" {}={} ({})", trait_letter(t), format_fixed(st.mean[t], 2),
                          format_fixed(st.sd[index_of(t)], 2));
    }
    fmt::print("{}\n", line);
  }
}

int analyze(const fs::path& run_dir, const std::string& report, fs::path out_dir, bool allow_partial,
            const std::vector<std::string>& profile_files, bool svg) {
  const RunPaths paths{run_dir};
  const auto manifest = RunManifest::load(paths.manifest());
  if (out_dir.empty()) out_dir = run_dir / "reports";
  fs::create_directories(out_dir);

  nlohmann::json meta = {{"run_id", manifest.run_id}, {"config_hash", manifest.config_hash}, {"report", report}};

  if (report == "radar") {
    auto models = bfi_stats_by_model(load_bfi_runs(paths.bfi_runs()));
    for (const auto& f : profile_files) {
      const auto j = nlohmann::json::parse(read_file(f));
      for (const auto& [name, entry] : j.at("models").items()) {
        models.emplace_back(name, trait_stats_from_json(entry));
      }
    }
    const auto radar = export_radar(models);
    write_file(out_dir / "radar.json", radar.dump(2) + "\n");
    if (svg) write_file(out_dir / "radar.svg", render_radar_svg(radar));
    fmt::print("wrote {} series to {}\n", radar["series"].size(), (out_dir / "radar.json").string());
    return kOk;
  }

  const auto records = load_transcripts(paths.transcripts());
  const auto stats = summarize(manifest, records, allow_partial);
  meta["normalization"] = kNormalizationRule;
  meta["cooperation_rate"] = "agent Cooperate actions / agent actions, pooled over rounds";
  meta["n_records"] = records.size();
  meta["n_groups"] = stats.size();

  std::ostringstream csv;
  if (report == "coop" || report == "payoff") {
    write_summary_csv(csv, stats);
  } else if (report == "diff") {
    const auto diffs = diff_table(stats);
    meta["difference"] = "value 5 minus value 1";
    write_diff_csv(csv, diffs);
  } else {
    throw std::invalid_argument("unknown report " + report);
  }
  write_file(out_dir / (report + ".csv"), csv.str());
  write_file(out_dir / (report + ".meta.json"), meta.dump(2) + "\n");
  std::cout << csv.str();
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Iterated prisoner's dilemma experiments with personality-prompted LLM agents"};
  app.require_subcommand(1);
  std::string log_level = "info";
  std::string data;
  app.add_option("--log-level", log_level, "trace|debug|info|warn|error|off");
  app.add_option("--data-dir", data, "Override the data directory (templates, instrument, references)");

  std::string config_path;
  std::optional<int> parallelism;
  std::size_t max_trials = 0;
  std::string run_ref;
  std::string runs_dir = "runs";

  auto* measure = app.add_subcommand("measure-bfi", "Administer the questionnaire to every configured model");
  measure->add_option("--config", config_path, "Run config (JSON)")->required()->check(CLI::ExistingFile);
  measure->add_option("--parallelism", parallelism);

  auto* run = app.add_subcommand("run", "Start a run from a config");
  run->add_option("--config", config_path, "Run config (JSON)")->required()->check(CLI::ExistingFile);
  run->add_option("--parallelism", parallelism);
  run->add_option("--max-trials", max_trials, "Stop after this many trials (0 = all)");

  auto* resume = app.add_subcommand("resume", "Continue an interrupted run");
  resume->add_option("--run", run_ref, "Run id or directory")->required();
  resume->add_option("--runs-dir", runs_dir);
  resume->add_option("--parallelism", parallelism);
  resume->add_option("--max-trials", max_trials);

  auto* status = app.add_subcommand("status", "Show per-condition progress");
  status->add_option("--run", run_ref, "Run id or directory")->required();
  status->add_option("--runs-dir", runs_dir);

  std::string report;
  std::string out_dir;
  bool allow_partial = false;
  bool svg = false;
  std::vector<std::string> profile_files;
  auto* an = app.add_subcommand("analyze", "Write a report for a run");
  an->add_option("--run", run_ref, "Run id or directory")->required();
  an->add_option("--runs-dir", runs_dir);
  an->add_option("--report", report)->required()->check(CLI::IsMember({"coop", "payoff", "diff", "radar"}));
  an->add_option("--out", out_dir, "Reports directory (default <run>/reports)");
  an->add_flag("--allow-partial", allow_partial, "Skip conditions without completed matches");
  an->add_option("--profiles", profile_files, "Extra radar series from a profile file")->check(CLI::ExistingFile);
  an->add_flag("--svg", svg, "Also write radar.svg");

  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(spdlog::level::from_str(log_level));
  if (!data.empty()) set_data_dir(data);
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);

  try {
    if (*measure) {
      auto config = RunConfig::load(config_path);
      config.experiments = {Experiment::E1_BFI};
      const auto summary = start_run(config, run_options(parallelism, 0));
      const int code = report_run(summary);
      if (summary.pending == 0) write_bfi_summary(summary.dir);
      return code;
    }
    if (*run) return report_run(start_run(RunConfig::load(config_path), run_options(parallelism, max_trials)));
    if (*resume) {
      return report_run(resume_run(resolve_run(run_ref, runs_dir), run_options(parallelism, max_trials)));
    }
    if (*status) {
      const auto manifest = RunManifest::load(RunPaths{resolve_run(run_ref, runs_dir)}.manifest());
      for (std::size_t i = 0; i < manifest.conditions.size(); ++i) {
        const auto& c = manifest.conditions[i];
        fmt::print("{}  {:<44} {:>4}/{:<4} failed {}\n", c.id, c.label(), manifest.completed[i].size(), c.trials,
                   manifest.failed[i].size());
      }
      fmt::print("{}: {}/{} trials complete, {} failed\n", manifest.run_id, manifest.completed_trials(),
                 manifest.total_trials(), manifest.failed_trials());
      return kOk;
    }
    if (*an) return analyze(resolve_run(run_ref, runs_dir), report, out_dir, allow_partial, profile_files, svg);
  } catch (const EmptyGroup& e) {
    spdlog::error("empty group: {}", e.what());
    return kAnalysis;
  } catch (const MissingPair& e) {
    spdlog::error("missing pair: {}", e.what());
    return kAnalysis;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kError;
  }
  return kOk;
}
