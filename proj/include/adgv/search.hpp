#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <queue>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "adgv/backend.hpp"
#include "adgv/tree.hpp"
#include "adgv/validators.hpp"

namespace adgv {

// DG: deductive fringe only. AG: abductive only. ADG: both, round-trip
// validators off. ADGV: both, all validators on.
enum class Mode { DG, AG, ADG, ADGV };

std::string_view to_string(Mode mode);
Mode mode_from_string(std::string_view name);  // case-insensitive

bool uses_deduction(Mode mode);
bool uses_abduction(Mode mode);
Capabilities required_capabilities(Mode mode);

enum class TieBreak { insertion_order };

inline constexpr int kDefaultAbductiveSamples = 40;
inline constexpr int kDefaultDeductiveSamples = 10;

struct SearchConfig {
  int k_abductive = kDefaultAbductiveSamples;
  int k_deductive = kDefaultDeductiveSamples;
  int forward_budget = 25;
  int backward_budget = 25;
  ValidatorConfig validator_config;
  Mode mode = Mode::ADGV;
  TieBreak tie_break = TieBreak::insertion_order;
  // A pop whose generations are all filtered still counts against the budget.
  bool consume_budget_on_empty = true;
  // Run the two sampling calls of an iteration concurrently when the
  // backend is thread safe.
  bool parallel_sampling = true;

  void validate() const;  // throws ConfigError
};

struct FringeEntry {
  std::array<StatementId, 2> pair;  // (conclusion, premise) for abduction
  double priority = 0.0;
  std::uint64_t inserted_at = 0;
};

// Max-priority queue with FIFO tie-breaking. Priorities are fixed at
// insertion.
class Fringe {
 public:
  void push(FringeEntry entry) { heap_.push(std::move(entry)); }
  std::optional<FringeEntry> pop();
  std::size_t size() const noexcept { return heap_.size(); }
  bool empty() const noexcept { return heap_.empty(); }

 private:
  struct Worse {
    bool operator()(const FringeEntry& a, const FringeEntry& b) const {
      if (a.priority != b.priority) return a.priority < b.priority;
      return a.inserted_at > b.inserted_at;
    }
  };
  std::priority_queue<FringeEntry, std::vector<FringeEntry>, Worse> heap_;
};

// Removes the best entry; nullopt on an empty fringe.
std::optional<FringeEntry> pop_best(Fringe& fringe);

// One popped pair and what became of its generations.
struct EventRecord {
  int iter = 0;
  Direction direction = Direction::deductive;
  std::array<StatementId, 2> pair;
  std::vector<std::string> generations;
  std::vector<bool> kept;
  std::vector<double> scores;        // agreement score, 0 when not validated
  std::vector<std::string> reasons;  // why each generation was dropped
  std::string error;                 // backend failure, pair pruned

  nlohmann::json to_json() const;
};

struct SearchState {
  Fringe fringe_d;
  Fringe fringe_a;
  std::vector<StatementId> seen_d;  // insertion order
  std::vector<StatementId> seen_a;
  int steps_taken_d = 0;
  int steps_taken_a = 0;
  std::vector<StepRecord> events;   // every kept step, in order
  std::vector<EventRecord> log;     // every pop
  std::vector<StatementId> yielded;
  int iterations = 0;
  int backend_errors = 0;

  StatementId goal;
  std::vector<StatementId> premises;
  std::unordered_map<StatementId, Statement> statements;
  Lineage lineage;
  std::unordered_set<std::string> seen_d_text;
  std::unordered_set<std::string> seen_a_text;
  std::uint64_t next_insertion = 0;

  const Statement& statement(const StatementId& id) const;
};

// Table of allowed step inputs: deduction combines premises and deductive
// intermediates; abduction takes the goal or a hypothesis as conclusion
// and a premise or deductive intermediate as premise.
bool eligible_pair(const Statement& a, const Statement& b, Direction direction);

SearchState init_fringes(std::span<const Statement> premises, const Statement& goal,
                         const SearchConfig& config, const StepBackend& backend);

// Called for every validated hypothesis as soon as it is produced. Return
// false to stop the search after the current iteration.
using YieldCallback = std::function<bool(const Statement&)>;

SearchState adgv_search(std::span<const Statement> premises, const Statement& goal,
                        const SearchConfig& config, const StepBackend& backend,
                        const YieldCallback& on_yield = {});

// Reconstructs the deductive proof of the goal that ends in `hypothesis`.
// Throws IntegrityError if the chain is broken.
ProofTree assemble_proof(const StatementId& hypothesis, const SearchState& state);

}  // namespace adgv
