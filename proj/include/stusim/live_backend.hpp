#pragma once

// OpenAI-compatible chat-completions backend. Kept out of llm.hpp so the
// library and the test binaries never pull in socket code; only the CLI
// includes this header. HTTPS needs CPPHTTPLIB_OPENSSL_SUPPORT, which the
// build enables when OpenSSL is available.

#include <cstdlib>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "stusim/errors.hpp"
#include "stusim/llm.hpp"

namespace stusim {

struct LiveBackendConfig {
  std::string base_url;  // e.g. https://api.openai.com/v1
  std::string api_key;   // never logged
  std::string model;
  int timeout_seconds = 120;
};

/// Reads STUSIM_API_BASE / STUSIM_API_KEY / STUSIM_MODEL with OPENAI_BASE_URL
/// / OPENAI_API_KEY fallbacks. Returns nullopt when no endpoint is set.
inline std::optional<LiveBackendConfig> live_config_from_env() {
  auto get = [](const char* name) -> std::string {
    const char* value = std::getenv(name);
    return value ? value : "";
  };
  LiveBackendConfig config;
  config.base_url = get("STUSIM_API_BASE");
  if (config.base_url.empty()) config.base_url = get("OPENAI_BASE_URL");
  config.api_key = get("STUSIM_API_KEY");
  if (config.api_key.empty()) config.api_key = get("OPENAI_API_KEY");
  config.model = get("STUSIM_MODEL");
  if (config.model.empty()) config.model = "gpt-4o-mini";
  if (config.base_url.empty()) return std::nullopt;
  return config;
}

class LiveBackend final : public CompletionBackend {
 public:
  explicit LiveBackend(LiveBackendConfig config) : config_(std::move(config)) {
    if (config_.base_url.empty()) throw ValidationError("live backend requires a base URL");
    split_base_url();
  }

  std::vector<std::string> complete(const InvocationRequest& request) override {
    nlohmann::json body{{"model", config_.model},
                        {"messages",
                         nlohmann::json::array(
                             {nlohmann::json{{"role", "user"}, {"content", request.prompt}}})},
                        {"temperature", request.temperature},
                        {"n", request.sample_count}};

    httplib::Client client(host_);
    client.set_connection_timeout(config_.timeout_seconds);
    client.set_read_timeout(config_.timeout_seconds);
    httplib::Headers headers;
    if (!config_.api_key.empty())
      headers.emplace("Authorization", "Bearer " + config_.api_key);

    const httplib::Result result =
        client.Post(path_prefix_ + "/chat/completions", headers, body.dump(), "application/json");
    if (!result)
      throw TransportError("live backend: connection to " + host_ + " failed (" +
                           httplib::to_string(result.error()) + ")");
    if (result->status >= 500)
      throw TransportError("live backend: server returned status " +
                           std::to_string(result->status));
    if (result->status != 200)
      throw GatewayError("live backend: request failed with status " +
                         std::to_string(result->status) + ": " + result->body);

    nlohmann::json response;
    try {
      response = nlohmann::json::parse(result->body);
    } catch (const nlohmann::json::parse_error& e) {
      throw GatewayError(std::string("live backend: unparseable response body: ") + e.what());
    }
    if (!response.contains("choices") || !response.at("choices").is_array())
      throw GatewayError("live backend: response has no choices array");
    std::vector<std::string> completions;
    for (const nlohmann::json& choice : response.at("choices")) {
      if (!choice.contains("message") || !choice.at("message").contains("content"))
        throw GatewayError("live backend: choice has no message content");
      completions.push_back(choice.at("message").at("content").get<std::string>());
    }
    if (completions.size() != static_cast<std::size_t>(request.sample_count))
      throw GatewayError("live backend: expected " + std::to_string(request.sample_count) +
                         " choices, got " + std::to_string(completions.size()));
    return completions;
  }

  std::string describe() const override { return "live:" + config_.model; }

 private:
  void split_base_url() {
    // httplib::Client accepts scheme://host[:port]; the path prefix must be
    // carried separately.
    std::string url = config_.base_url;
    while (!url.empty() && url.back() == '/') url.pop_back();
    const std::size_t scheme = url.find("://");
    const std::size_t path_start =
        url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
    if (path_start == std::string::npos) {
      host_ = url;
      path_prefix_.clear();
    } else {
      host_ = url.substr(0, path_start);
      path_prefix_ = url.substr(path_start);
    }
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
    if (host_.rfind("https://", 0) == 0)
      throw ValidationError(
          "live backend: this build lacks TLS support; use an http:// endpoint or rebuild with "
          "OpenSSL");
#endif
  }

  LiveBackendConfig config_;
  std::string host_;
  std::string path_prefix_;
};

}  // namespace stusim
