#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <functional>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace adgv {

struct StatementId {
  std::string value;

  auto operator<=>(const StatementId&) const = default;
  bool empty() const noexcept { return value.empty(); }
};

}  // namespace adgv

template <>
struct std::hash<adgv::StatementId> {
  std::size_t operator()(const adgv::StatementId& id) const noexcept {
    return std::hash<std::string>{}(id.value);
  }
};

namespace adgv {

enum class Role { premise, intermediate, goal, hypothesis };
enum class Origin { dataset, deductive_step, abductive_step };
enum class Direction { deductive, abductive };

std::string_view to_string(Role role);
std::string_view to_string(Origin origin);
std::string_view to_string(Direction direction);

// Premises and deductive intermediates live on the forward side; the goal
// and abductive hypotheses on the backward side. Ids carry the side so the
// same text may be seen once by each search direction.
enum class Side { forward, backward };

Side side_of(Role role);

StatementId make_id(std::string_view text, Side side);

struct Statement {
  StatementId id;
  std::string text;        // raw, for display
  std::string normalized;  // canonical equality key
  Role role = Role::premise;
  Origin origin = Origin::dataset;
  bool synthetic = false;  // produced by binarizing a wide step

  // Throws StructuralError if the text normalizes to empty or role and
  // origin disagree.
  static Statement make(std::string_view text, Role role, Origin origin);
};

struct Validation {
  double agreement_score = 0.0;
  bool passed = false;
  std::string error;
};

// Deductive: inputs are unordered premises, output is the conclusion.
// Abductive: inputs are (conclusion, premise), output is the hypothesis.
struct StepRecord {
  Direction direction = Direction::deductive;
  std::array<StatementId, 2> inputs;
  StatementId output;
  std::optional<Validation> validation;

  const StatementId& conclusion_slot() const { return inputs[0]; }
  const StatementId& premise_slot() const { return inputs[1]; }
};

// (c, x -> x') becomes (x, x' -> c) and back.
StepRecord invert(const StepRecord& step);

// Structural comparison ignoring validation; deductive inputs compare as a
// multiset.
bool same_step(const StepRecord& a, const StepRecord& b);

// Parent index over statements and the steps that produced them.
class Lineage {
 public:
  Lineage() = default;
  explicit Lineage(std::span<const StepRecord> steps);

  void add_root(const StatementId& id);
  void add_step(const StepRecord& step);
  bool contains(const StatementId& id) const;
  const StepRecord* producer(const StatementId& id) const;

  // {s} at eta = 1; each additional level adds the inputs of the step that
  // produced the previous frontier. Throws NotFoundError for unknown ids.
  std::set<StatementId> ancestry(const StatementId& id, int eta) const;

 private:
  std::unordered_map<StatementId, std::optional<StepRecord>> parents_;
};

std::set<StatementId> ancestry(const StatementId& id, int eta,
                               std::span<const StepRecord> steps);

class EntailmentTree {
 public:
  // Validates the structure and computes the depth. Throws StructuralError
  // naming the first violating node.
  static EntailmentTree build(std::string id, std::vector<Statement> premises,
                              std::vector<Statement> intermediates,
                              std::vector<StepRecord> steps, Statement goal);

  const std::string& id() const noexcept { return id_; }
  const std::vector<Statement>& premises() const noexcept { return premises_; }
  const std::vector<Statement>& intermediates() const noexcept {
    return intermediates_;
  }
  // Topologically ordered: each step's inputs are premises or outputs of
  // earlier steps.
  const std::vector<StepRecord>& steps() const noexcept { return steps_; }
  const Statement& goal() const noexcept { return goal_; }
  int depth() const noexcept { return depth_; }

  const Statement& statement(const StatementId& id) const;
  const Statement* find(const StatementId& id) const;

  // Steps needed to derive `root` (an intermediate or the goal), in tree
  // order.
  std::vector<std::size_t> subtree_steps(const StatementId& root) const;
  // Premises under `root`, in premise order.
  std::vector<std::size_t> subtree_premises(const StatementId& root) const;

 private:
  EntailmentTree() = default;

  std::string id_;
  std::vector<Statement> premises_;
  std::vector<Statement> intermediates_;
  std::vector<StepRecord> steps_;
  Statement goal_;
  int depth_ = 0;
  std::unordered_map<StatementId, std::size_t> producer_;
};

struct Treelet {
  std::string id;
  std::string tree_id;
  EntailmentTree base;
  std::size_t ablated_index = 0;
  Statement missing;
  std::vector<Statement> visible_premises;
  bool full = false;               // rooted at the original tree's goal
  bool deductive_capable = false;  // at least two visible premises

  int depth() const noexcept { return base.depth(); }
};

std::vector<Treelet> slice_treelets(const EntailmentTree& tree);

struct ProofTree {
  Statement root;
  std::vector<StepRecord> steps;  // all deductive
  StatementId recovered;
  std::optional<double> rerank_score;
  std::vector<std::string> step_flags;  // per-step rerank diagnostics
  std::vector<Statement> statements;    // every statement the steps mention

  std::size_t length() const noexcept { return steps.size(); }
  const Statement& statement(const StatementId& id) const;
  // Statements used as inputs but never produced by a step.
  std::vector<StatementId> leaves() const;
};

// Indented text dump rooted at the goal.
std::string render_tree(const EntailmentTree& tree);
std::string render_proof(const ProofTree& proof);

}  // namespace adgv
