#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

#include "coopsteer/live_agent.hpp"

#include <cstdlib>
#include <regex>

#include <fmt/format.h>

namespace coopsteer {

void ModelConfig::validate() const {
  if (name.empty() || model.empty()) throw std::invalid_argument("model config needs name and model");
  const bool reasoning = reasoning_effort.has_value() || verbosity.has_value();
  if (temperature.has_value() == reasoning) {
    throw std::invalid_argument(
        fmt::format("model {}: set either temperature or reasoning_effort/verbosity", name));
  }
  if (temperature && !(*temperature >= 0.0 && *temperature <= 2.0)) {
    throw std::invalid_argument(fmt::format("model {}: temperature {} outside [0, 2]", name, *temperature));
  }
  if (max_retries < 0) throw std::invalid_argument("max_retries must be >= 0");
  if (rate_limit_rpm < 1) throw std::invalid_argument("rate_limit_rpm must be >= 1");
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.name = j.at("name").get<std::string>();
  c.model = j.value("model", c.name);
  c.endpoint = j.value("endpoint", c.endpoint);
  c.api_key_env = j.value("api_key_env", c.api_key_env);
  if (j.contains("reasoning_effort")) c.reasoning_effort = j["reasoning_effort"].get<std::string>();
  if (j.contains("verbosity")) c.verbosity = j["verbosity"].get<std::string>();
  if (j.contains("temperature")) {
    c.temperature = j["temperature"].get<double>();
  } else if (!c.reasoning_effort && !c.verbosity) {
    c.temperature = 0.7;
  }
  c.timeout = std::chrono::milliseconds(static_cast<long>(j.value("timeout_s", 60.0) * 1000));
  c.max_retries = j.value("max_retries", c.max_retries);
  c.rate_limit_rpm = j.value("rate_limit_rpm", c.rate_limit_rpm);
  c.validate();
  return c;
}

nlohmann::json ModelConfig::to_json() const {
  nlohmann::json j = {{"name", name},         {"model", model},
                      {"endpoint", endpoint}, {"api_key_env", api_key_env},
                      {"timeout_s", timeout.count() / 1000.0}, {"max_retries", max_retries},
                      {"rate_limit_rpm", rate_limit_rpm}};
  if (temperature) j["temperature"] = *temperature;
  if (reasoning_effort) j["reasoning_effort"] = *reasoning_effort;
  if (verbosity) j["verbosity"] = *verbosity;
  return j;
}

nlohmann::json build_chat_request(const ModelConfig& config, const Conversation& conversation) {
  nlohmann::json messages = nlohmann::json::array();
  for (const auto& m : conversation) messages.push_back({{"role", role_name(m.role)}, {"content", m.content}});
  nlohmann::json body = {{"model", config.model}, {"messages", std::move(messages)}};
  if (config.temperature) body["temperature"] = *config.temperature;
  if (config.reasoning_effort) body["reasoning_effort"] = *config.reasoning_effort;
  if (config.verbosity) body["verbosity"] = *config.verbosity;
  return body;
}

std::string extract_reply(const nlohmann::json& response) {
  try {
    const auto& content = response.at("choices").at(0).at("message").at("content");
    if (!content.is_string()) throw TransportError("reply content is not a string");
    return content.get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw TransportError(std::string("unexpected response shape: ") + e.what());
  }
}

struct LiveAgent::Endpoint {
  std::string base;  // scheme://host[:port]
  std::string path;
  std::unique_ptr<httplib::Client> client;
};

LiveAgent::LiveAgent(ModelConfig config, std::shared_ptr<RateLimiter> limiter, ExchangeSink sink)
    : config_(std::move(config)), limiter_(std::move(limiter)), sink_(std::move(sink)) {
  config_.validate();
  if (!limiter_) limiter_ = std::make_shared<RateLimiter>(config_.rate_limit_rpm);
  if (const char* key = std::getenv(config_.api_key_env.c_str())) api_key_ = key;

  static const std::regex kUrl(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(config_.endpoint, m, kUrl)) {
    throw std::invalid_argument("bad endpoint URL: " + config_.endpoint);
  }
  endpoint_ = std::make_unique<Endpoint>();
  endpoint_->base = m[1].str();
  endpoint_->path = m[2].matched ? m[2].str() : "/";
  endpoint_->client = std::make_unique<httplib::Client>(endpoint_->base);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
  endpoint_->client->set_connection_timeout(secs);
  endpoint_->client->set_read_timeout(secs);
  endpoint_->client->set_write_timeout(secs);
}

LiveAgent::~LiveAgent() = default;

std::string LiveAgent::complete(const Conversation& conversation, const RequestContext& ctx) {
  const auto body = build_chat_request(config_, conversation);
  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

  limiter_->acquire();
  auto res = endpoint_->client->Post(endpoint_->path, headers, body.dump(), "application/json");

  nlohmann::json exchange = {{"model", config_.name}, {"key", ctx.replay_key}, {"attempt", ctx.attempt},
                             {"request", body}};
  auto log = [&] {
    if (sink_) sink_(exchange);
  };
  if (!res) {
    exchange["error"] = httplib::to_string(res.error());
    log();
    throw TransportError(fmt::format("{}: {}", config_.endpoint, httplib::to_string(res.error())));
  }
  exchange["status"] = res->status;
  nlohmann::json parsed = nlohmann::json::parse(res->body, nullptr, false);
  exchange["response"] = parsed.is_discarded() ? nlohmann::json(res->body) : parsed;
  log();
  if (res->status < 200 || res->status >= 300) {
    throw TransportError(fmt::format("{} returned HTTP {}", config_.endpoint, res->status));
  }
  if (parsed.is_discarded()) throw TransportError("response body is not JSON");
  return extract_reply(parsed);
}

}  // namespace coopsteer
