#include "adgv/config.hpp"

#include <fstream>
#include <set>

#include "adgv/errors.hpp"
#include "adgv/oracle.hpp"
#include "adgv/remote.hpp"

namespace adgv {

using nlohmann::json;

std::string_view to_string(EntailDirection d) {
  switch (d) {
    case EntailDirection::rightward: return "rightward";
    case EntailDirection::leftward: return "leftward";
    case EntailDirection::bidirectional: return "bidirectional";
  }
  return "?";
}

EntailDirection entail_direction_from_string(std::string_view s) {
  for (auto d : {EntailDirection::rightward, EntailDirection::leftward, EntailDirection::bidirectional})
    if (to_string(d) == s) return d;
  throw ConfigError("unknown entailment direction '" + std::string(s) + "'");
}

void RunConfig::merge(const json& j) {
  static const std::set<std::string> known = {
      "mode", "k", "k_prime", "forward_budget", "backward_budget", "t_d", "t_a", "t_m", "eta",
      "backend", "seed", "datasets", "workers", "early_stop", "budget_schedule", "stratum",
      "entail_direction", "agreement_metric", "validators", "consume_budget_on_empty"};
  if (!j.is_object()) throw ConfigError("run config must be an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!known.count(it.key())) throw ConfigError("unknown run-config key '" + it.key() + "'");

  try {
    auto& s = eval.search;
    auto& v = s.validator_config;
    if (j.contains("mode")) s.mode = mode_from_string(j["mode"].get<std::string>());
    if (j.contains("k")) s.k_abductive = j["k"].get<int>();
    if (j.contains("k_prime")) s.k_deductive = j["k_prime"].get<int>();
    if (j.contains("forward_budget")) s.forward_budget = j["forward_budget"].get<int>();
    if (j.contains("backward_budget")) s.backward_budget = j["backward_budget"].get<int>();
    if (j.contains("consume_budget_on_empty"))
      s.consume_budget_on_empty = j["consume_budget_on_empty"].get<bool>();
    if (j.contains("t_d")) v.t_d = j["t_d"].get<double>();
    if (j.contains("t_a")) v.t_a = j["t_a"].get<double>();
    if (j.contains("eta")) v.eta = j["eta"].get<int>();
    if (j.contains("validators")) {
      v.enabled.clear();
      for (const auto& name : j["validators"]) v.enabled.insert(validator_from_string(name.get<std::string>()));
    }
    if (j.contains("agreement_metric")) {
      auto m = j["agreement_metric"].get<std::string>();
      if (m == "harmonic") v.metric = AgreementMetric::harmonic;
      else if (m == "entailment") v.metric = AgreementMetric::entailment;
      else throw ConfigError("unknown agreement metric '" + m + "'");
    }
    if (j.contains("entail_direction")) {
      eval.direction = entail_direction_from_string(j["entail_direction"].get<std::string>());
      v.direction = eval.direction;
    }
    if (j.contains("t_m")) eval.t_m = j["t_m"].get<double>();
    if (j.contains("seed")) eval.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("workers")) eval.workers = j["workers"].get<int>();
    if (j.contains("early_stop")) eval.early_stop = j["early_stop"].get<bool>();
    if (j.contains("budget_schedule")) eval.use_budget_schedule = j["budget_schedule"].get<bool>();
    if (j.contains("stratum")) {
      auto st = j["stratum"].get<std::string>();
      if (st == "depth") eval.stratum = Stratum::depth;
      else if (st == "full") eval.stratum = Stratum::full;
      else throw ConfigError("unknown stratum '" + st + "'");
    }
    if (j.contains("backend")) backend = j["backend"].get<std::string>();
    if (j.contains("datasets")) datasets = j["datasets"].get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad run config: ") + e.what());
  }
  if (!(eval.t_m >= 0.0 && eval.t_m <= 1.0)) throw ConfigError("t_m must be in [0,1]");
  eval.search.validate();
}

RunConfig RunConfig::from_json(const json& j) {
  RunConfig c;
  c.merge(j);
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open run config " + path.string());
  try {
    return from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw ConfigError("run config " + path.string() + ": " + e.what());
  }
}

json RunConfig::to_json() const {
  const auto& s = eval.search;
  const auto& v = s.validator_config;
  json validators = json::array();
  for (auto name : v.enabled) validators.push_back(to_string(name));
  return json{{"mode", to_string(s.mode)},
              {"k", s.k_abductive},
              {"k_prime", s.k_deductive},
              {"forward_budget", s.forward_budget},
              {"backward_budget", s.backward_budget},
              {"consume_budget_on_empty", s.consume_budget_on_empty},
              {"t_d", v.t_d},
              {"t_a", v.t_a},
              {"eta", v.eta},
              {"validators", std::move(validators)},
              {"agreement_metric", v.metric == AgreementMetric::harmonic ? "harmonic" : "entailment"},
              {"entail_direction", to_string(eval.direction)},
              {"t_m", eval.t_m},
              {"seed", eval.seed},
              {"workers", eval.workers},
              {"early_stop", eval.early_stop},
              {"budget_schedule", eval.use_budget_schedule},
              {"stratum", eval.stratum == Stratum::full ? "full" : "depth"},
              {"backend", backend},
              {"datasets", datasets}};
}

std::unique_ptr<StepBackend> make_backend(const std::string& uri) {
  auto colon = uri.find(':');
  if (colon == std::string::npos)
    throw ConfigError("backend must be oracle:<world-file> or remote:<url>, got '" + uri + "'");
  std::string kind = uri.substr(0, colon);
  std::string arg = uri.substr(colon + 1);
  if (kind == "oracle") return std::make_unique<OracleBackend>(OracleWorld::load(arg));
  if (kind == "remote") return RemoteBackend::from_env(arg);
  throw ConfigError("unknown backend kind '" + kind + "'");
}

}  // namespace adgv
