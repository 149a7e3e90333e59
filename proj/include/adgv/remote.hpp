#pragma once

#include <memory>
#include <chrono>
#include <mutex>
#include <optional>
#include <string>

#include <json.hpp>

#include "adgv/backend.hpp"

namespace adgv {

// Client for the model bridge. Endpoints (POST, JSON bodies):
//   /generate-deductive {inputs:[a,b], n, mode}        -> {generations:[...]}
//   /generate-abductive {premise, conclusion, n, mode} -> {generations:[...]}
//   /entail             {premise, hypothesis}          -> {probability}
//   /heuristic          {kind, goal?, pairs:[[a,b]]}   -> {scores:[...]}
//   GET /health                                        -> {capabilities:[...], models:{...}}
//
// Every failure (transport, HTTP status, schema) surfaces as BackendError
// carrying the raw body. Thread safe: each call opens its own connection.
class RemoteBackend final : public StepBackend {
 public:
  // `url` is "http://host:port". The bearer token, when set, is sent as
  // an Authorization header.
  explicit RemoteBackend(std::string url, std::optional<std::string> token = std::nullopt,
                         std::chrono::seconds timeout = std::chrono::seconds(120));

  // Reads the token from $ADGV_BRIDGE_TOKEN.
  static std::unique_ptr<RemoteBackend> from_env(std::string url);

  Capabilities capabilities() const override;
  std::string identity() const override;
  bool thread_safe() const override { return true; }

  std::vector<std::string> deduce(const std::string& first, const std::string& second, int n,
                                  Decode mode) const override;
  std::vector<std::string> abduce(const std::string& premise, const std::string& conclusion,
                                  int n, Decode mode) const override;
  double entail(const std::string& premise, const std::string& hypothesis) const override;
  std::vector<double> heuristic(HeuristicKind kind, const std::optional<std::string>& goal,
                                std::span<const TextPair> pairs) const override;

  // GET /health; throws BackendError when unreachable.
  nlohmann::json health() const;

 private:
  struct Response {
    nlohmann::json body;
    std::string raw;
  };
  Response post(const std::string& path, const nlohmann::json& body) const;
  static std::vector<std::string> generations(const Response& response, int n);

  std::string url_;
  std::optional<std::string> token_;
  std::chrono::seconds timeout_;
  mutable std::mutex mu_;
  mutable std::optional<Capabilities> caps_;
  mutable std::string models_;
};

}  // namespace adgv
