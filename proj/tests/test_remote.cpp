#include <doctest.h>

#include <atomic>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "adgv/errors.hpp"
#include "adgv/eval.hpp"
#include "adgv/oracle.hpp"
#include "adgv/remote.hpp"

using namespace adgv;
using nlohmann::json;

namespace {

// Serves the bridge protocol on localhost from an in-process oracle.
class StubBridge {
 public:
  explicit StubBridge(OracleWorld world, std::string token = {})
      : oracle_(std::move(world)), token_(std::move(token)) {
    auto guard = [this](const httplib::Request& req, httplib::Response& res) {
      ++requests_;
      if (!token_.empty() && req.get_header_value("Authorization") != "Bearer " + token_) {
        res.status = 401;
        res.set_content(R"({"error":"unauthorized"})", "application/json");
        return false;
      }
      return true;
    };
    auto reply = [this](httplib::Response& res, const json& body) {
      if (broken_) {
        res.set_content(R"({"unexpected": true})", "application/json");
        return;
      }
      res.set_content(body.dump(), "application/json");
    };
    srv_.Get("/health", [=, this](const httplib::Request& req, httplib::Response& res) {
      if (!guard(req, res)) return;
      res.set_content(json{{"capabilities", caps_},
                           {"models", {{"deductive", "stub"}, {"abductive", "stub"}}}}
                          .dump(),
                      "application/json");
    });
    srv_.Post("/generate-deductive", [=, this](const httplib::Request& req, httplib::Response& res) {
      if (!guard(req, res)) return;
      auto b = json::parse(req.body);
      int n = b.at("n");
      auto mode = b.at("mode") == "greedy" ? Decode::greedy : Decode::sample;
      auto out = oracle_.deduce(b.at("inputs")[0], b.at("inputs")[1], n, mode);
      if (overfill_) out.resize(static_cast<std::size_t>(n) + 2, "extra");
      reply(res, {{"generations", out}});
    });
    srv_.Post("/generate-abductive", [=, this](const httplib::Request& req, httplib::Response& res) {
      if (!guard(req, res)) return;
      auto b = json::parse(req.body);
      auto mode = b.at("mode") == "greedy" ? Decode::greedy : Decode::sample;
      reply(res, {{"generations", oracle_.abduce(b.at("premise"), b.at("conclusion"), b.at("n"), mode)}});
    });
    srv_.Post("/entail", [=, this](const httplib::Request& req, httplib::Response& res) {
      if (!guard(req, res)) return;
      auto b = json::parse(req.body);
      reply(res, {{"probability", oracle_.entail(b.at("premise"), b.at("hypothesis"))}});
    });
    srv_.Post("/heuristic", [=, this](const httplib::Request& req, httplib::Response& res) {
      if (!guard(req, res)) return;
      auto b = json::parse(req.body);
      std::vector<TextPair> pairs;
      for (const auto& p : b.at("pairs")) pairs.emplace_back(p[0], p[1]);
      std::optional<std::string> goal;
      if (b.contains("goal")) goal = b["goal"].get<std::string>();
      auto kind = b.at("kind") == "deductive" ? HeuristicKind::deductive : HeuristicKind::abductive;
      reply(res, {{"scores", oracle_.heuristic(kind, goal, pairs)}});
    });
    port_ = srv_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { srv_.listen_after_bind(); });
    srv_.wait_until_ready();
  }
  ~StubBridge() {
    srv_.stop();
    thread_.join();
  }

  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }
  void set_broken(bool b) { broken_ = b; }
  void set_overfill(bool b) { overfill_ = b; }
  void set_capabilities(std::vector<std::string> caps) { caps_ = std::move(caps); }
  int requests() const { return requests_; }

 private:
  OracleBackend oracle_;
  std::string token_;
  httplib::Server srv_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<bool> broken_{false};
  std::atomic<bool> overfill_{false};
  std::atomic<int> requests_{0};
  std::vector<std::string> caps_{"deduce", "abduce", "entail", "heuristic_d", "heuristic_a"};
};

}  // namespace

TEST_SUITE("remote") {

TEST_CASE("all endpoints round trip through the stub") {
  StubBridge stub{OracleWorld{}};
  RemoteBackend remote(stub.url());
  CHECK(remote.capabilities().has(Capability::heuristic_a));
  CHECK(remote.identity().find("stub") != std::string::npos);
  CHECK(remote.deduce("a cat is a kind of mammal", "a mammal has fur", 10, Decode::sample) ==
        std::vector<std::string>{"a cat has fur"});
  CHECK(remote.abduce("a cat is a kind of mammal", "a cat has fur", 40, Decode::sample) ==
        std::vector<std::string>{"a mammal has fur"});
  CHECK(remote.entail("a cat has fur", "a cat has fur") == 1.0);
  CHECK(remote.entail("a cat has fur", "a dog has fur") == 0.0);
  std::vector<TextPair> pairs{{"a cat has fur", "a cat is a kind of mammal"}, {"a cat has fur", "x"}};
  CHECK(remote.heuristic(HeuristicKind::abductive, std::string("a cat has fur"), pairs) ==
        std::vector<double>{1.0, 0.0});
  CHECK(remote.heuristic(HeuristicKind::deductive, std::nullopt, {}).empty());
}

TEST_CASE("greedy calls are deterministic") {
  StubBridge stub{OracleWorld{}};
  RemoteBackend remote(stub.url());
  auto a = remote.deduce("a cat is a kind of mammal", "a mammal is a kind of animal", 1, Decode::greedy);
  auto b = remote.deduce("a cat is a kind of mammal", "a mammal is a kind of animal", 1, Decode::greedy);
  CHECK(a == b);
  CHECK(a.size() == 1);
}

TEST_CASE("schema violations raise BackendError with the payload") {
  StubBridge stub{OracleWorld{}};
  RemoteBackend remote(stub.url());
  stub.set_broken(true);
  try {
    remote.entail("a", "b");
    FAIL("expected BackendError");
  } catch (const BackendError& e) {
    CHECK(e.payload().find("unexpected") != std::string::npos);
  }
  CHECK_THROWS_AS(remote.deduce("a", "b", 2, Decode::sample), BackendError);
  CHECK_THROWS_AS(remote.heuristic(HeuristicKind::deductive, std::nullopt, std::vector<TextPair>{{"a", "b"}}),
                  BackendError);
  stub.set_broken(false);
  stub.set_overfill(true);
  CHECK_THROWS_AS(remote.deduce("a cat is a kind of mammal", "a mammal has fur", 2, Decode::sample),
                  BackendError);
}

TEST_CASE("unreachable bridge") {
  int port;
  {
    httplib::Server probe;
    port = probe.bind_to_any_port("127.0.0.1");
  }
  RemoteBackend remote("http://127.0.0.1:" + std::to_string(port), std::nullopt, std::chrono::seconds(2));
  CHECK_THROWS_AS(remote.entail("a", "b"), BackendError);
  CHECK_THROWS_AS(remote.health(), BackendError);
}

TEST_CASE("bearer token") {
  StubBridge stub{OracleWorld{}, "s3cret"};
  RemoteBackend anonymous(stub.url());
  try {
    anonymous.entail("a", "a");
    FAIL("expected BackendError");
  } catch (const BackendError& e) {
    CHECK(std::string(e.what()).find("401") != std::string::npos);
    CHECK(e.payload().find("unauthorized") != std::string::npos);
  }
  RemoteBackend authorized(stub.url(), "s3cret");
  CHECK(authorized.entail("a cat has fur", "a cat has fur") == 1.0);
}

TEST_CASE("remote evaluation matches the in-process oracle") {
  OracleWorld w;
  auto suite = generate_oracle_suite(w, 2, 6, 17);
  StubBridge stub{w};
  RemoteBackend remote(stub.url());
  OracleBackend local(w);
  EvalConfig c;
  c.workers = 3;
  auto a = run_suite(suite, c, remote);
  auto b = run_suite(suite, c, local);
  CHECK(a.failed == 0);
  CHECK(a.overall_coverage == b.overall_coverage);
  auto ra = a.score_rows(), rb = b.score_rows();
  REQUIRE(ra.size() == rb.size());
  for (std::size_t i = 0; i < ra.size(); ++i) CHECK(ra[i].dump() == rb[i].dump());
  CHECK(stub.requests() > 0);
}

TEST_CASE("missing capability is reported before searching") {
  StubBridge stub{OracleWorld{}};
  stub.set_capabilities({"deduce", "entail", "heuristic_d"});
  RemoteBackend remote(stub.url());
  OracleWorld w;
  auto suite = generate_oracle_suite(w, 1, 2, 1);
  EvalConfig c;
  CHECK_THROWS_AS(run_suite(suite, c, remote), ConfigError);
  c.search.mode = Mode::DG;
  CHECK_NOTHROW(run_suite(suite, c, remote));
}

}
