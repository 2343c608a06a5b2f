#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <functional>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "coopsteer/traits.hpp"

namespace coopsteer {

class ChatAgent;
struct PromptTemplates;

inline constexpr std::size_t kBfiItemCount = 44;

struct BfiItem {
  std::string label;  // "a" .. "ar", shown as "(a)"
  std::string text;
  Trait dimension;
  bool reverse_keyed = false;
};

/// The 44-item questionnaire and its keying map, loaded from a versioned
/// data file. Loading verifies item/dimension counts and the checksum.
class BfiInstrument {
 public:
  static BfiInstrument load(const std::filesystem::path& path);

  std::span<const BfiItem> items() const { return items_; }
  std::optional<std::size_t> index_of(std::string_view label) const;
  const std::string& checksum() const { return checksum_; }
  int version() const { return version_; }

 private:
  std::vector<BfiItem> items_;
  std::string checksum_;
  int version_ = 0;
};

const BfiInstrument& default_instrument();

/// Ratings in questionnaire order.
struct BfiResponseSet {
  std::array<int, kBfiItemCount> ratings{};
  std::string raw_reply;
  int attempt_count = 1;
};

class BfiFormatError : public std::runtime_error {
 public:
  enum class Kind { Missing, Duplicate, OutOfRange, NonNumeric };
  BfiFormatError(Kind kind, std::string label, const std::string& detail);
  Kind kind() const { return kind_; }
  const std::string& label() const { return label_; }

 private:
  Kind kind_;
  std::string label_;
};

std::string render_bfi_prompt(const BfiInstrument& instrument = default_instrument());
std::string render_bfi_prompt(const BfiInstrument& instrument, const PromptTemplates& t);

/// Accepts one "(label) rating" per line. Blank lines, surrounding
/// whitespace and lines that do not start with "(" are ignored; a literal
/// "\n" counts as a line break. Throws BfiFormatError naming the first
/// offending item.
BfiResponseSet parse_bfi_reply(std::string_view raw, const BfiInstrument& instrument = default_instrument());

// "(a) 3\n(b) 4\n..." in questionnaire order, no trailing newline.
std::string serialize_bfi_ratings(const BfiResponseSet& responses,
                                  const BfiInstrument& instrument = default_instrument());

/// Reverse-keyed items count as 6 - rating; each dimension is the mean of
/// its items.
TraitScores score_bfi(const BfiResponseSet& responses, const BfiInstrument& instrument = default_instrument());

struct TraitStats {
  TraitScores mean;
  std::array<double, 5> sd{};  // population SD (divide by n), indexed by Trait
  int n_runs = 0;
};

// Throws std::invalid_argument on an empty sample.
TraitStats compute_trait_stats(std::span<const TraitScores> runs);

nlohmann::json to_json(const TraitStats& stats);
TraitStats trait_stats_from_json(const nlohmann::json& j);

class MeasurementFailure : public std::runtime_error {
 public:
  MeasurementFailure(int run, int attempts, const std::string& last_error);
  int run() const { return run_; }
  int attempts() const { return attempts_; }

 private:
  int run_;
  int attempts_;
};

struct MeasurementResult {
  TraitStats stats;
  std::vector<TraitScores> runs;
  std::vector<BfiResponseSet> responses;
};

struct AdministrationOptions {
  int n_runs = 20;
  int max_attempts = 5;  // sends per run, including the first
  std::string key_prefix = "bfi";
  std::uint64_t seed = 0;
  std::chrono::milliseconds backoff_base{1000};
  std::function<void(std::chrono::milliseconds)> sleep;  // defaults to this_thread::sleep_for
};

/// One administration in a fresh conversation (agent reset with `seed`),
/// replay key "<key_prefix>/run<run>". Throws MeasurementFailure.
BfiResponseSet administer_bfi_run(ChatAgent& agent, int run, std::uint64_t seed,
                                  const AdministrationOptions& options = {});

/// Administers the questionnaire `n_runs` times, each in a fresh
/// conversation, sending the whole questionnaire as one user message. A
/// malformed reply (or a transport error) re-presents the questionnaire, up
/// to `max_attempts` sends per run. Replay keys are "<key_prefix>/run<k>"
/// with k counted from 1. Throws MeasurementFailure when a run runs out.
MeasurementResult measure_personality(ChatAgent& agent, const AdministrationOptions& options = {});

}  // namespace coopsteer
