#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "adgv/scoring.hpp"
#include "adgv/search.hpp"
#include "adgv/tree.hpp"

namespace adgv {

// Backward (and forward) step budget per treelet depth: 2, 4, 8, 16 for
// depths 1-4 and 25 for deeper or full-tree treelets.
int scheduled_budget(int depth, bool full_stratum);

enum class Stratum { depth, full };

struct EvalConfig {
  SearchConfig search;
  double t_m = kDefaultRecoveryThreshold;
  EntailDirection direction = EntailDirection::rightward;
  bool use_budget_schedule = true;  // otherwise search budgets apply as given
  Stratum stratum = Stratum::depth;
  bool early_stop = false;  // stop a search once x_m is recovered
  int workers = 1;
  std::uint64_t seed = 0;  // recorded in the report header
};

struct HypothesisRow {
  std::string text;
  RecoveryScore score;
  std::string proof_id;  // empty unless recovered
  std::optional<double> rerank_score;
};

struct TreeletResult {
  std::string treelet_id;
  int depth = 0;
  bool full = false;
  int forward_budget = 0;
  int backward_budget = 0;
  int steps_taken_d = 0;
  int steps_taken_a = 0;
  bool covered = false;
  bool failed = false;
  std::string error;
  std::vector<HypothesisRow> hypotheses;
  std::vector<ProofTree> proofs;  // recovered proofs, best first
  std::optional<double> top_p_recall;
  std::vector<EventRecord> log;
};

struct TreeMetrics {
  double count = 0.0;     // mean recovered proofs per covered treelet
  double len = 0.0;       // mean assembled steps per proof
  double score = 0.0;     // mean rerank score per proof
  double p_recall = 0.0;  // mean premise recall of the top proof
  std::size_t proofs = 0;
};

struct EvalReport {
  Mode mode = Mode::ADGV;
  std::uint64_t seed = 0;
  double t_m = kDefaultRecoveryThreshold;
  std::map<std::string, double> coverage;      // stratum -> fraction
  std::map<std::string, std::size_t> counts;   // stratum -> treelets
  double overall_coverage = 0.0;
  TreeMetrics tree;
  std::size_t failed = 0;
  std::vector<TreeletResult> rows;

  nlohmann::json summary_json() const;
  std::string summary_text() const;
  std::vector<nlohmann::json> detail_rows() const;
  std::vector<nlohmann::json> score_rows() const;
};

std::string stratum_key(const Treelet& t, Stratum stratum);

// Throws Error on an empty suite and ConfigError when the backend lacks a
// capability the mode needs. Backend failures mark the treelet failed.
EvalReport run_suite(std::span<const Treelet> treelets, const EvalConfig& config,
                     const StepBackend& backend);

double premise_recall(const ProofTree& proof, std::span<const Statement> visible);

nlohmann::json proof_to_json(const ProofTree& proof, const std::string& proof_id);

}  // namespace adgv
