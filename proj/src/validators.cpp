#include "adgv/validators.hpp"

#include <algorithm>

#include "adgv/errors.hpp"
#include "adgv/text.hpp"

namespace adgv {

std::string_view to_string(ValidatorName v) {
  switch (v) {
    case ValidatorName::deductive_agreement: return "deductive-agreement";
    case ValidatorName::abductive_agreement: return "abductive-agreement";
    case ValidatorName::consanguinity: return "consanguinity";
  }
  return "?";
}

ValidatorName validator_from_string(std::string_view name) {
  for (auto v : {ValidatorName::deductive_agreement, ValidatorName::abductive_agreement,
                 ValidatorName::consanguinity})
    if (to_string(v) == name) return v;
  throw ConfigError("unknown validator '" + std::string(name) + "'");
}

void ValidatorConfig::validate() const {
  if (!(t_d >= 0.0 && t_d <= 1.0)) throw ConfigError("t_d must be in [0,1]");
  if (!(t_a >= 0.0 && t_a <= 1.0)) throw ConfigError("t_a must be in [0,1]");
  if (eta < 1) throw ConfigError("eta must be at least 1");
}

namespace {

double agreement(const std::string& generated, const std::string& reference,
                 const StepBackend& backend, const ValidatorConfig& config) {
  Scorer scorer(backend, config.direction);
  if (config.metric == AgreementMetric::entailment)
    return std::clamp(scorer.entail(generated, reference), 0.0, 1.0);
  return scorer.score(generated, reference).s;
}

}  // namespace

ValidationResult validate_abductive(const std::string& conclusion, const std::string& premise,
                                    const std::string& hypothesis, const StepBackend& backend,
                                    const ValidatorConfig& config) {
  ValidationResult r;
  try {
    auto regenerated = backend.deduce(premise, hypothesis, 1, Decode::greedy);
    if (regenerated.empty()) return r;
    r.score = agreement(regenerated.front(), conclusion, backend, config);
    r.passed = r.score >= config.t_d;
  } catch (const BackendError& e) {
    r = {false, 0.0, e.what()};
  }
  return r;
}

ValidationResult validate_deductive(const std::string& x1, const std::string& x2,
                                    const std::string& conclusion, const StepBackend& backend,
                                    const ValidatorConfig& config) {
  ValidationResult r;
  try {
    auto x2_hat = backend.abduce(x1, conclusion, 1, Decode::greedy);
    auto x1_hat = backend.abduce(x2, conclusion, 1, Decode::greedy);
    double s1 = x1_hat.empty() ? 0.0 : agreement(x1_hat.front(), x1, backend, config);
    double s2 = x2_hat.empty() ? 0.0 : agreement(x2_hat.front(), x2, backend, config);
    r.score = std::min(s1, s2);
    r.passed = s1 >= config.t_a && s2 >= config.t_a && !x1_hat.empty() && !x2_hat.empty();
  } catch (const BackendError& e) {
    r = {false, 0.0, e.what()};
  }
  return r;
}

bool dedup(const std::string& candidate, std::span<const std::string> step_inputs,
           const std::unordered_set<std::string>& seen) {
  auto norm = normalize(candidate);
  if (norm.empty() || seen.count(norm)) return false;
  return std::none_of(step_inputs.begin(), step_inputs.end(),
                      [&](const std::string& in) { return normalize(in) == norm; });
}

bool consanguinity_ok(const StatementId& a, const StatementId& b, int eta,
                      const Lineage& lineage) {
  auto lhs = lineage.ancestry(a, eta);
  auto rhs = lineage.ancestry(b, eta);
  for (const auto& s : lhs)
    if (rhs.count(s)) return false;
  return true;
}

bool consanguinity_ok(const StatementId& a, const StatementId& b, int eta,
                      std::span<const StepRecord> steps) {
  Lineage lineage(steps);
  for (const auto* id : {&a, &b})
    if (!lineage.contains(*id)) lineage.add_root(*id);
  return consanguinity_ok(a, b, eta, lineage);
}

}  // namespace adgv
