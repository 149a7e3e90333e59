#pragma once

#include <string>
#include <vector>

#include "adgv/backend.hpp"
#include "adgv/tree.hpp"

namespace adgv {

// Unigram F-measure over normalized whitespace tokens with clipped
// multiset overlap. 0 when either side has no tokens.
double rouge1(const std::string& candidate, const std::string& reference);

// 2ab/(a+b), 0 when a + b = 0.
double harmonic_mean(double a, double b);

enum class EntailDirection {
  rightward,      // generated entails reference
  leftward,       // reference entails generated
  bidirectional,  // minimum of both
};

struct RecoveryScore {
  double s_r = 0.0;
  double s_e = 0.0;
  double s = 0.0;
  bool recovered = false;
};

inline constexpr double kDefaultRecoveryThreshold = 0.7;

// Harmonic mean of ROUGE-1 and entailment between a generated statement
// and a reference. Entailment failures propagate as BackendError.
class Scorer {
 public:
  explicit Scorer(const StepBackend& backend,
                  EntailDirection direction = EntailDirection::rightward,
                  double threshold = kDefaultRecoveryThreshold)
      : backend_(backend), direction_(direction), threshold_(threshold) {}

  RecoveryScore score(const std::string& generated, const std::string& reference) const;
  double entail(const std::string& generated, const std::string& reference) const;
  double threshold() const noexcept { return threshold_; }

 private:
  const StepBackend& backend_;
  EntailDirection direction_;
  double threshold_;
};

RecoveryScore recovery_score(const std::string& x_prime, const std::string& x_m,
                             const StepBackend& entail,
                             double t_m = kDefaultRecoveryThreshold,
                             EntailDirection direction = EntailDirection::rightward);

// Mean over steps of entail(greedy deduce(x1, x2), c). A step whose
// backend call fails scores 0 and is flagged in step_flags. Returns the
// proofs stably sorted by descending score. Throws Error on a proof with
// no steps.
std::vector<ProofTree> rerank_proofs(std::vector<ProofTree> proofs, const StepBackend& backend);

}  // namespace adgv
