#include "adgv/scoring.hpp"

#include <algorithm>
#include <map>

#include "adgv/errors.hpp"
#include "adgv/text.hpp"

namespace adgv {

double rouge1(const std::string& candidate, const std::string& reference) {
  auto cand = tokenize(candidate);
  auto ref = tokenize(reference);
  if (cand.empty() || ref.empty()) return 0.0;
  std::map<std::string, int> ref_counts;
  for (const auto& t : ref) ++ref_counts[t];
  std::size_t overlap = 0;
  for (const auto& t : cand) {
    auto it = ref_counts.find(t);
    if (it != ref_counts.end() && it->second > 0) {
      --it->second;
      ++overlap;
    }
  }
  if (overlap == 0) return 0.0;
  double p = static_cast<double>(overlap) / static_cast<double>(cand.size());
  double r = static_cast<double>(overlap) / static_cast<double>(ref.size());
  return 2.0 * p * r / (p + r);
}

double harmonic_mean(double a, double b) {
  if (a + b <= 0.0) return 0.0;
  return 2.0 * a * b / (a + b);
}

double Scorer::entail(const std::string& generated, const std::string& reference) const {
  switch (direction_) {
    case EntailDirection::rightward:
      return backend_.entail(generated, reference);
    case EntailDirection::leftward:
      return backend_.entail(reference, generated);
    case EntailDirection::bidirectional:
      return std::min(backend_.entail(generated, reference),
                      backend_.entail(reference, generated));
  }
  return 0.0;
}

RecoveryScore Scorer::score(const std::string& generated, const std::string& reference) const {
  RecoveryScore out;
  out.s_r = rouge1(reference, generated);
  out.s_e = std::clamp(entail(generated, reference), 0.0, 1.0);
  out.s = harmonic_mean(out.s_r, out.s_e);
  out.recovered = out.s >= threshold_;
  return out;
}

RecoveryScore recovery_score(const std::string& x_prime, const std::string& x_m,
                             const StepBackend& entail, double t_m,
                             EntailDirection direction) {
  return Scorer(entail, direction, t_m).score(x_prime, x_m);
}

std::vector<ProofTree> rerank_proofs(std::vector<ProofTree> proofs, const StepBackend& backend) {
  for (auto& proof : proofs) {
    if (proof.steps.empty()) throw Error("cannot rerank a proof with no steps");
    proof.step_flags.assign(proof.steps.size(), std::string{});
    double total = 0.0;
    for (std::size_t i = 0; i < proof.steps.size(); ++i) {
      const auto& st = proof.steps[i];
      const auto& c = proof.statement(st.output).text;
      try {
        auto regenerated = backend.deduce(proof.statement(st.inputs[0]).text,
                                          proof.statement(st.inputs[1]).text, 1, Decode::greedy);
        if (regenerated.empty()) {
          proof.step_flags[i] = "no-generation";
          continue;
        }
        total += std::clamp(backend.entail(regenerated.front(), c), 0.0, 1.0);
      } catch (const BackendError& e) {
        proof.step_flags[i] = std::string("backend-error: ") + e.what();
      }
    }
    proof.rerank_score = total / static_cast<double>(proof.steps.size());
  }
  std::stable_sort(proofs.begin(), proofs.end(), [](const ProofTree& a, const ProofTree& b) {
    return *a.rerank_score > *b.rerank_score;
  });
  return proofs;
}

}  // namespace adgv
