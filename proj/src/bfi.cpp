#include "coopsteer/bfi.hpp"

#include <cmath>
#include <thread>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "coopsteer/agent.hpp"
#include "coopsteer/prompts.hpp"
#include "coopsteer/seeds.hpp"
#include "coopsteer/text.hpp"

namespace coopsteer {

namespace {

constexpr std::array<int, 5> kExpectedItemsPerTrait = {10, 9, 8, 9, 8};  // O C E A N

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::string_view kind_text(BfiFormatError::Kind kind) {
  switch (kind) {
    case BfiFormatError::Kind::Missing: return "missing";
    case BfiFormatError::Kind::Duplicate: return "duplicate";
    case BfiFormatError::Kind::OutOfRange: return "out of range";
    case BfiFormatError::Kind::NonNumeric: return "non-numeric";
  }
  return "invalid";
}

}  // namespace

BfiFormatError::BfiFormatError(Kind kind, std::string label, const std::string& detail)
    : std::runtime_error(fmt::format("item ({}): {}{}{}", label, kind_text(kind), detail.empty() ? "" : ": ", detail)),
      kind_(kind),
      label_(std::move(label)) {}

MeasurementFailure::MeasurementFailure(int run, int attempts, const std::string& last_error)
    : std::runtime_error(fmt::format("BFI run {} gave no valid reply in {} attempts: {}", run, attempts, last_error)),
      run_(run), attempts_(attempts) {}

BfiInstrument BfiInstrument::load(const std::filesystem::path& path) {
  const auto j = nlohmann::json::parse(read_file(path));
  BfiInstrument inst;
  inst.version_ = j.at("version").get<int>();
  inst.checksum_ = j.at("checksum").get<std::string>();

  std::string canonical;
  std::array<int, 5> per_trait{};
  for (const auto& it : j.at("items")) {
    BfiItem item{it.at("label").get<std::string>(), it.at("text").get<std::string>(),
                 trait_from_string(it.at("dimension").get<std::string>()),
                 it.at("reverse_keyed").get<bool>()};
    if (inst.index_of(item.label)) throw std::runtime_error("duplicate BFI label " + item.label);
    canonical += fmt::format("{}\t{}\t{}\t{}\n", item.label, trait_letter(item.dimension),
                             item.reverse_keyed ? 1 : 0, item.text);
    ++per_trait[coopsteer::index_of(item.dimension)];
    inst.items_.push_back(std::move(item));
  }
  if (inst.items_.size() != kBfiItemCount || per_trait != kExpectedItemsPerTrait) {
    throw std::runtime_error(path.string() + ": expected 44 items split O10/C9/E8/A9/N8");
  }
  if (sha256_hex(canonical) != inst.checksum_) {
    throw std::runtime_error(path.string() + ": keying checksum mismatch");
  }
  return inst;
}

std::optional<std::size_t> BfiInstrument::index_of(std::string_view label) const {
  for (std::size_t i = 0; i < items_.size(); ++i) {
    if (items_[i].label == label) return i;
  }
  return std::nullopt;
}

const BfiInstrument& default_instrument() {
  static const BfiInstrument inst = BfiInstrument::load(data_dir() / "bfi44.json");
  return inst;
}

std::string render_bfi_prompt(const BfiInstrument& instrument) {
  return render_bfi_prompt(instrument, default_templates());
}

std::string render_bfi_prompt(const BfiInstrument& instrument, const PromptTemplates& t) {
  std::string items;
  for (const auto& item : instrument.items()) {
    if (!items.empty()) items += '\n';
    items += fmt::format("({}) {}", item.label, item.text);
  }
  return substitute(t.bfi_questionnaire, {{"ITEMS", items}});
}

BfiResponseSet parse_bfi_reply(std::string_view raw, const BfiInstrument& instrument) {
  using Kind = BfiFormatError::Kind;

  std::string text;
  text.reserve(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (raw[i] == '\\' && i + 1 < raw.size() && raw[i + 1] == 'n') {
      text += '\n';
      ++i;
    } else {
      text += raw[i];
    }
  }

  BfiResponseSet out;
  out.raw_reply = std::string(raw);
  std::array<bool, kBfiItemCount> seen{};

  std::string_view rest = text;
  while (!rest.empty()) {
    const auto nl = rest.find('\n');
    const auto line = trim(rest.substr(0, nl));
    rest = nl == std::string_view::npos ? std::string_view{} : rest.substr(nl + 1);

    if (line.empty() || line.front() != '(') continue;
    const auto close = line.find(')');
    if (close == std::string_view::npos) continue;
    const auto label = line.substr(1, close - 1);
    const auto idx = instrument.index_of(label);
    if (!idx) continue;  // not an item line

    const auto value = trim(line.substr(close + 1));
    const std::string lab(label);
    if (value.empty()) throw BfiFormatError(Kind::NonNumeric, lab, "no rating");
    for (char c : value) {
      if (c < '0' || c > '9') throw BfiFormatError(Kind::NonNumeric, lab, fmt::format("'{}'", value));
    }
    if (seen[*idx]) throw BfiFormatError(Kind::Duplicate, lab, "");
    const int rating = value.size() > 2 ? 99 : std::stoi(std::string(value));
    if (rating < 1 || rating > 5) throw BfiFormatError(Kind::OutOfRange, lab, std::string(value));
    seen[*idx] = true;
    out.ratings[*idx] = rating;
  }
  for (std::size_t i = 0; i < kBfiItemCount; ++i) {
    if (!seen[i]) throw BfiFormatError(Kind::Missing, instrument.items()[i].label, "");
  }
  return out;
}

std::string serialize_bfi_ratings(const BfiResponseSet& responses, const BfiInstrument& instrument) {
  std::string out;
  for (std::size_t i = 0; i < kBfiItemCount; ++i) {
    if (i) out += '\n';
    out += fmt::format("({}) {}", instrument.items()[i].label, responses.ratings[i]);
  }
  return out;
}

TraitScores score_bfi(const BfiResponseSet& responses, const BfiInstrument& instrument) {
  std::array<int, 5> sum{};
  std::array<int, 5> count{};
  for (std::size_t i = 0; i < kBfiItemCount; ++i) {
    const auto& item = instrument.items()[i];
    const int r = responses.ratings[i];
    const auto d = coopsteer::index_of(item.dimension);
    sum[d] += item.reverse_keyed ? 6 - r : r;
    ++count[d];
  }
  TraitScores s;
  for (std::size_t d = 0; d < 5; ++d) s.values[d] = static_cast<double>(sum[d]) / count[d];
  return s;
}

TraitStats compute_trait_stats(std::span<const TraitScores> runs) {
  if (runs.empty()) throw std::invalid_argument("no runs to aggregate");
  TraitStats st;
  st.n_runs = static_cast<int>(runs.size());
  const double n = static_cast<double>(runs.size());
  for (std::size_t d = 0; d < 5; ++d) {
    double sum = 0.0;
    for (const auto& r : runs) sum += r.values[d];
    const double mean = sum / n;
    double ss = 0.0;
    for (const auto& r : runs) ss += (r.values[d] - mean) * (r.values[d] - mean);
    st.mean.values[d] = mean;
    st.sd[d] = std::sqrt(ss / n);
  }
  return st;
}

nlohmann::json to_json(const TraitStats& stats) {
  nlohmann::json sd = nlohmann::json::object();
  for (auto t : kTraitOrder) sd[std::string(trait_letter(t))] = stats.sd[index_of(t)];
  return {{"mean", to_json(stats.mean)}, {"sd", sd}, {"n_runs", stats.n_runs}, {"sd_convention", "population"}};
}

TraitStats trait_stats_from_json(const nlohmann::json& j) {
  TraitStats st;
  st.mean = trait_scores_from_json(j.at("mean"));
  for (auto t : kTraitOrder) st.sd[index_of(t)] = j.at("sd").at(std::string(trait_letter(t))).get<double>();
  st.n_runs = j.value("n_runs", 0);
  return st;
}

BfiResponseSet administer_bfi_run(ChatAgent& agent, int run, std::uint64_t seed, const AdministrationOptions& opt) {
  if (opt.max_attempts < 1) throw std::invalid_argument("max_attempts must be >= 1");
  auto sleep = opt.sleep ? opt.sleep : [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };

  static const std::string prompt = render_bfi_prompt();
  const Conversation conversation{{Role::User, prompt}};

  agent.reset(seed);
  RequestContext ctx;
  ctx.purpose = Purpose::Questionnaire;
  ctx.replay_key = fmt::format("{}/run{}", opt.key_prefix, run);

  std::string last_error;
  int transport_failures = 0;
  for (int attempt = 1; attempt <= opt.max_attempts; ++attempt) {
    ctx.attempt = attempt;
    try {
      auto parsed = parse_bfi_reply(agent.complete(conversation, ctx));
      parsed.attempt_count = attempt;
      return parsed;
    } catch (const BfiFormatError& e) {
      last_error = e.what();
      spdlog::info("BFI run {} attempt {}: {}; asking again", run, attempt, e.what());
    } catch (const TransportError& e) {
      last_error = e.what();
      spdlog::warn("BFI run {} attempt {}: {}", run, attempt, e.what());
      if (attempt < opt.max_attempts) sleep(opt.backoff_base * (std::int64_t{1} << std::min(transport_failures++, 10)));
    } catch (const FixtureMissing& e) {
      throw MeasurementFailure(run, attempt, e.what());
    }
  }
  throw MeasurementFailure(run, opt.max_attempts, last_error);
}

MeasurementResult measure_personality(ChatAgent& agent, const AdministrationOptions& opt) {
  if (opt.n_runs < 1) throw std::invalid_argument("n_runs must be >= 1");
  MeasurementResult result;
  for (int run = 1; run <= opt.n_runs; ++run) {
    auto parsed = administer_bfi_run(agent, run, derive_seed(opt.seed, {static_cast<std::uint64_t>(run)}), opt);
    result.runs.push_back(score_bfi(parsed));
    result.responses.push_back(std::move(parsed));
  }
  result.stats = compute_trait_stats(result.runs);
  return result;
}

}  // namespace coopsteer
