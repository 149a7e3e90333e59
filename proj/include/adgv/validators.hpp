#pragma once

#include <set>
#include <span>
#include <string>
#include <unordered_set>

#include "adgv/backend.hpp"
#include "adgv/scoring.hpp"
#include "adgv/tree.hpp"

namespace adgv {

enum class ValidatorName { deductive_agreement, abductive_agreement, consanguinity };

std::string_view to_string(ValidatorName v);
ValidatorName validator_from_string(std::string_view name);

// Round-trip agreement compares regenerated text to the original either
// with the harmonic-mean recovery score or with raw entailment.
enum class AgreementMetric { harmonic, entailment };

struct ValidatorConfig {
  double t_d = 0.7;
  double t_a = 0.7;
  int eta = 1;
  std::set<ValidatorName> enabled = {ValidatorName::deductive_agreement,
                                     ValidatorName::abductive_agreement,
                                     ValidatorName::consanguinity};
  AgreementMetric metric = AgreementMetric::harmonic;
  EntailDirection direction = EntailDirection::rightward;

  bool is_enabled(ValidatorName v) const { return enabled.count(v) > 0; }
  // Throws ConfigError.
  void validate() const;
};

struct ValidationResult {
  bool passed = false;
  double score = 0.0;
  std::string error;
};

// Deductive agreement for the abductive step (c, x -> x'): regenerate
// c' = greedy deduce(x, x') and require agreement(c', c) >= t_d.
ValidationResult validate_abductive(const std::string& conclusion, const std::string& premise,
                                    const std::string& hypothesis, const StepBackend& backend,
                                    const ValidatorConfig& config);

// Abductive agreement for the deductive step (x1, x2 -> c): both inputs
// must be recovered from the other input and c; the score is the minimum.
ValidationResult validate_deductive(const std::string& x1, const std::string& x2,
                                    const std::string& conclusion, const StepBackend& backend,
                                    const ValidatorConfig& config);

// Keep iff the normalized candidate is unseen and copies no step input.
bool dedup(const std::string& candidate, std::span<const std::string> step_inputs,
           const std::unordered_set<std::string>& seen);

// True iff the depth-eta ancestries of a and b are disjoint.
bool consanguinity_ok(const StatementId& a, const StatementId& b, int eta,
                      const Lineage& lineage);
bool consanguinity_ok(const StatementId& a, const StatementId& b, int eta,
                      std::span<const StepRecord> steps);

}  // namespace adgv
