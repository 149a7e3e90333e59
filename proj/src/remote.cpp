#include "adgv/remote.hpp"

#include <cmath>
#include <cstdlib>

#include <httplib.h>

#include "adgv/errors.hpp"

namespace adgv {

using nlohmann::json;

namespace {

const char* decode_name(Decode mode) { return mode == Decode::greedy ? "greedy" : "sample"; }

}  // namespace

RemoteBackend::RemoteBackend(std::string url, std::optional<std::string> token,
                             std::chrono::seconds timeout)
    : url_(std::move(url)), token_(std::move(token)), timeout_(timeout) {
  while (!url_.empty() && url_.back() == '/') url_.pop_back();
}

std::unique_ptr<RemoteBackend> RemoteBackend::from_env(std::string url) {
  std::optional<std::string> token;
  if (const char* t = std::getenv("ADGV_BRIDGE_TOKEN"); t && *t) token = t;
  return std::make_unique<RemoteBackend>(std::move(url), std::move(token));
}

json RemoteBackend::health() const {
  httplib::Client cli(url_);
  cli.set_connection_timeout(timeout_);
  cli.set_read_timeout(timeout_);
  if (token_) cli.set_bearer_token_auth(*token_);
  auto res = cli.Get("/health");
  if (!res)
    throw BackendError("bridge " + url_ + " unreachable: " + httplib::to_string(res.error()));
  if (res->status != 200)
    throw BackendError("bridge /health returned HTTP " + std::to_string(res->status), res->body);
  try {
    return json::parse(res->body);
  } catch (const json::exception& e) {
    throw BackendError(std::string("bridge /health returned malformed JSON: ") + e.what(), res->body);
  }
}

Capabilities RemoteBackend::capabilities() const {
  std::lock_guard lock(mu_);
  if (caps_) return *caps_;
  json h = health();
  Capabilities caps;
  if (!h.contains("capabilities") || !h["capabilities"].is_array())
    throw BackendError("bridge /health has no capabilities list", h.dump());
  for (const auto& c : h["capabilities"]) {
    if (!c.is_string()) continue;
    for (auto cap : {Capability::deduce, Capability::abduce, Capability::entail,
                     Capability::heuristic_d, Capability::heuristic_a})
      if (c.get<std::string>() == to_string(cap)) caps.add(cap);
  }
  if (h.contains("models")) models_ = h["models"].dump();
  caps_ = caps;
  return caps;
}

std::string RemoteBackend::identity() const {
  std::lock_guard lock(mu_);
  return "remote:" + url_ + (models_.empty() ? "" : " " + models_);
}

RemoteBackend::Response RemoteBackend::post(const std::string& path, const json& body) const {
  httplib::Client cli(url_);
  cli.set_connection_timeout(timeout_);
  cli.set_read_timeout(timeout_);
  if (token_) cli.set_bearer_token_auth(*token_);
  auto res = cli.Post(path, body.dump(), "application/json");
  if (!res)
    throw BackendError("bridge " + url_ + path + " failed: " + httplib::to_string(res.error()));
  if (res->status != 200)
    throw BackendError("bridge " + path + " returned HTTP " + std::to_string(res->status), res->body);
  try {
    json out = json::parse(res->body);
    if (!out.is_object()) throw BackendError("bridge " + path + " response is not an object", res->body);
    return {std::move(out), res->body};
  } catch (const json::exception& e) {
    throw BackendError("bridge " + path + " returned malformed JSON: " + e.what(), res->body);
  }
}

std::vector<std::string> RemoteBackend::generations(const Response& res, int n) {
  const json& response = res.body;
  const std::string& raw = res.raw;
  if (!response.contains("generations") || !response["generations"].is_array())
    throw BackendError("response lacks a generations list", raw);
  std::vector<std::string> out;
  for (const auto& g : response["generations"]) {
    if (!g.is_string()) throw BackendError("generation is not a string", raw);
    out.push_back(g.get<std::string>());
  }
  if (static_cast<int>(out.size()) > n)
    throw BackendError("bridge returned " + std::to_string(out.size()) +
                           " generations for n=" + std::to_string(n), raw);
  return out;
}

std::vector<std::string> RemoteBackend::deduce(const std::string& first, const std::string& second,
                                               int n, Decode mode) const {
  auto res = post("/generate-deductive",
                  {{"inputs", {first, second}}, {"n", n}, {"mode", decode_name(mode)}});
  return generations(res, mode == Decode::greedy ? std::min(n, 1) : n);
}

std::vector<std::string> RemoteBackend::abduce(const std::string& premise,
                                               const std::string& conclusion, int n,
                                               Decode mode) const {
  auto res = post("/generate-abductive", {{"premise", premise},
                                          {"conclusion", conclusion},
                                          {"n", n},
                                          {"mode", decode_name(mode)}});
  return generations(res, mode == Decode::greedy ? std::min(n, 1) : n);
}

double RemoteBackend::entail(const std::string& premise, const std::string& hypothesis) const {
  auto res = post("/entail", {{"premise", premise}, {"hypothesis", hypothesis}});
  const json& body = res.body;
  if (!body.contains("probability") || !body["probability"].is_number())
    throw BackendError("response lacks a numeric probability", res.raw);
  double p = body["probability"].get<double>();
  if (!(p >= 0.0 && p <= 1.0)) throw BackendError("probability outside [0,1]", res.raw);
  return p;
}

std::vector<double> RemoteBackend::heuristic(HeuristicKind kind,
                                             const std::optional<std::string>& goal,
                                             std::span<const TextPair> pairs) const {
  json body{{"kind", kind == HeuristicKind::deductive ? "deductive" : "abductive"}};
  if (goal) body["goal"] = *goal;
  json ps = json::array();
  for (const auto& [a, b] : pairs) ps.push_back({a, b});
  body["pairs"] = std::move(ps);
  auto res = post("/heuristic", body);
  const std::string& raw = res.raw;
  if (!res.body.contains("scores") || !res.body["scores"].is_array())
    throw BackendError("response lacks a scores list", raw);
  std::vector<double> out;
  for (const auto& s : res.body["scores"]) {
    if (!s.is_number()) throw BackendError("heuristic score is not a number", raw);
    double v = s.get<double>();
    if (!std::isfinite(v)) throw BackendError("heuristic score is not finite", raw);
    out.push_back(v);
  }
  if (out.size() != pairs.size())
    throw BackendError("bridge returned " + std::to_string(out.size()) + " scores for " +
                           std::to_string(pairs.size()) + " pairs", raw);
  return out;
}

}  // namespace adgv
