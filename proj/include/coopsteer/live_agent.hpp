#pragma once

#include <chrono>
#include <functional>
#include <memory>
#include <optional>
#include <string>

#include "json.hpp"

#include "coopsteer/agent.hpp"
#include "coopsteer/rate_limiter.hpp"

namespace coopsteer {

/// Connection and sampling settings for one chat-completion model.
/// Exactly one sampling mode is active: temperature, or reasoning effort
/// plus verbosity (reasoning models, which receive no temperature).
struct ModelConfig {
  std::string name;  // label used in manifests and reports
  std::string model; // id sent to the endpoint
  std::string endpoint = "https://api.openai.com/v1/chat/completions";
  std::string api_key_env = "OPENAI_API_KEY";
  std::optional<double> temperature;
  std::optional<std::string> reasoning_effort;
  std::optional<std::string> verbosity;
  std::chrono::milliseconds timeout{60000};
  int max_retries = 5;
  int rate_limit_rpm = 60;

  // Throws std::invalid_argument when the sampling mode is ambiguous or the
  // temperature is outside [0, 2].
  void validate() const;

  // A config without reasoning settings gets temperature 0.7 when unset.
  static ModelConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

nlohmann::json build_chat_request(const ModelConfig& config, const Conversation& conversation);

// choices[0].message.content; throws TransportError on any other shape.
std::string extract_reply(const nlohmann::json& response);

// Receives one {"request", "response" | "error", "status", ...} record per
// exchange. API keys never appear in it.
using ExchangeSink = std::function<void(const nlohmann::json&)>;

/// Chat-completion client over HTTP(S).
class LiveAgent final : public ChatAgent {
 public:
  // Reads the key from `config.api_key_env`; an unset variable is allowed
  // (local endpoints) and sends no Authorization header.
  LiveAgent(ModelConfig config, std::shared_ptr<RateLimiter> limiter, ExchangeSink sink = {});
  ~LiveAgent() override;

  std::string_view kind() const override { return "live"; }
  std::string complete(const Conversation& conversation, const RequestContext& ctx) override;

  const ModelConfig& config() const { return config_; }

 private:
  struct Endpoint;
  ModelConfig config_;
  std::shared_ptr<RateLimiter> limiter_;
  ExchangeSink sink_;
  std::string api_key_;
  std::unique_ptr<Endpoint> endpoint_;
};

}  // namespace coopsteer
