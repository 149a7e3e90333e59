#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "adgv/backend.hpp"
#include "adgv/eval.hpp"
#include "adgv/search.hpp"

namespace adgv {

// Run-config file. Every field is optional; unknown keys are rejected.
//
//   {"mode": "adgv", "k": 40, "k_prime": 10, "forward_budget": 25,
//    "backward_budget": 25, "t_d": 0.7, "t_a": 0.7, "t_m": 0.7, "eta": 1,
//    "backend": "oracle:world.json", "seed": 0, "datasets": ["..."],
//    "workers": 1, "early_stop": false, "budget_schedule": true,
//    "stratum": "depth", "entail_direction": "rightward",
//    "agreement_metric": "harmonic", "validators": ["deductive-agreement", ...],
//    "consume_budget_on_empty": true}
struct RunConfig {
  EvalConfig eval;
  std::string backend;
  std::vector<std::string> datasets;

  static RunConfig from_json(const nlohmann::json& j);
  static RunConfig load(const std::filesystem::path& path);
  // Applies the keys present in `j` on top of this config.
  void merge(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

// "oracle:<world-file>" or "remote:<url>".
std::unique_ptr<StepBackend> make_backend(const std::string& uri);

std::string_view to_string(EntailDirection d);
EntailDirection entail_direction_from_string(std::string_view s);

}  // namespace adgv
