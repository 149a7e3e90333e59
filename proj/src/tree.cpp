#include "adgv/tree.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_set>

#include "adgv/errors.hpp"
#include "adgv/text.hpp"

namespace adgv {

std::string_view to_string(Role role) {
  switch (role) {
    case Role::premise: return "premise";
    case Role::intermediate: return "intermediate";
    case Role::goal: return "goal";
    case Role::hypothesis: return "hypothesis";
  }
  return "?";
}

std::string_view to_string(Origin origin) {
  switch (origin) {
    case Origin::dataset: return "dataset";
    case Origin::deductive_step: return "deductive-step";
    case Origin::abductive_step: return "abductive-step";
  }
  return "?";
}

std::string_view to_string(Direction direction) {
  return direction == Direction::deductive ? "deductive" : "abductive";
}

Side side_of(Role role) {
  return (role == Role::premise || role == Role::intermediate) ? Side::forward
                                                               : Side::backward;
}

StatementId make_id(std::string_view text, Side side) {
  return {std::string(side == Side::forward ? "f" : "b") +
          hex64(fnv1a(normalize(text)))};
}

Statement Statement::make(std::string_view text, Role role, Origin origin) {
  Statement s;
  s.text = std::string(text);
  s.normalized = normalize(text);
  s.role = role;
  s.origin = origin;
  if (s.normalized.empty())
    throw StructuralError("<empty>", "statement text is empty after normalization");
  bool hyp_ok = (role == Role::hypothesis) == (origin == Origin::abductive_step);
  bool mid_ok = (role == Role::intermediate) == (origin == Origin::deductive_step);
  if (!hyp_ok || !mid_ok)
    throw StructuralError(s.normalized, "role " + std::string(to_string(role)) +
                                            " is incompatible with origin " +
                                            std::string(to_string(origin)));
  s.id = make_id(s.normalized, side_of(role));
  return s;
}

StepRecord invert(const StepRecord& step) {
  StepRecord out;
  if (step.direction == Direction::abductive) {
    out.direction = Direction::deductive;
    out.inputs = {step.premise_slot(), step.output};
    out.output = step.conclusion_slot();
  } else {
    out.direction = Direction::abductive;
    out.inputs = {step.output, step.inputs[0]};
    out.output = step.inputs[1];
  }
  return out;
}

bool same_step(const StepRecord& a, const StepRecord& b) {
  if (a.direction != b.direction || a.output != b.output) return false;
  if (a.inputs == b.inputs) return true;
  return a.direction == Direction::deductive && a.inputs[0] == b.inputs[1] &&
         a.inputs[1] == b.inputs[0];
}

// --- Lineage ---------------------------------------------------------------

Lineage::Lineage(std::span<const StepRecord> steps) {
  for (const auto& step : steps) {
    for (const auto& in : step.inputs)
      if (!contains(in)) add_root(in);
  }
  for (const auto& step : steps) add_step(step);
}

void Lineage::add_root(const StatementId& id) { parents_.try_emplace(id); }

void Lineage::add_step(const StepRecord& step) {
  auto& slot = parents_[step.output];
  if (!slot) slot = step;
}

bool Lineage::contains(const StatementId& id) const {
  return parents_.count(id) > 0;
}

const StepRecord* Lineage::producer(const StatementId& id) const {
  auto it = parents_.find(id);
  if (it == parents_.end() || !it->second) return nullptr;
  return &*it->second;
}

std::set<StatementId> Lineage::ancestry(const StatementId& id, int eta) const {
  if (!contains(id)) throw NotFoundError("unknown statement id " + id.value);
  std::set<StatementId> out{id};
  std::vector<StatementId> frontier{id};
  for (int level = 2; level <= eta && !frontier.empty(); ++level) {
    std::vector<StatementId> next;
    for (const auto& s : frontier) {
      const StepRecord* step = producer(s);
      if (!step) continue;
      for (const auto& in : step->inputs)
        if (out.insert(in).second) next.push_back(in);
    }
    frontier = std::move(next);
  }
  return out;
}

std::set<StatementId> ancestry(const StatementId& id, int eta,
                               std::span<const StepRecord> steps) {
  return Lineage(steps).ancestry(id, eta);
}

// --- EntailmentTree --------------------------------------------------------

EntailmentTree EntailmentTree::build(std::string id,
                                     std::vector<Statement> premises,
                                     std::vector<Statement> intermediates,
                                     std::vector<StepRecord> steps,
                                     Statement goal) {
  if (steps.empty())
    throw StructuralError(goal.normalized, "tree has no steps");
  if (premises.empty())
    throw StructuralError(goal.normalized, "tree has no premises");

  enum class Kind { premise, intermediate, goal };
  std::unordered_map<StatementId, Kind> kind;
  for (const auto& p : premises) {
    if (p.role != Role::premise)
      throw StructuralError(p.normalized, "premise has wrong role");
    if (!kind.emplace(p.id, Kind::premise).second)
      throw StructuralError(p.normalized, "duplicate statement");
    if (p.normalized == goal.normalized)
      throw StructuralError(p.normalized, "goal equals a premise");
  }
  for (const auto& m : intermediates) {
    if (m.role != Role::intermediate)
      throw StructuralError(m.normalized, "intermediate has wrong role");
    if (!kind.emplace(m.id, Kind::intermediate).second)
      throw StructuralError(m.normalized, "duplicate statement");
  }
  if (goal.role != Role::goal)
    throw StructuralError(goal.normalized, "goal has wrong role");
  kind.emplace(goal.id, Kind::goal);

  std::unordered_map<StatementId, std::size_t> producer;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const auto& st = steps[i];
    if (st.direction != Direction::deductive)
      throw StructuralError(st.output.value, "tree step is not deductive");
    auto out = kind.find(st.output);
    if (out == kind.end())
      throw StructuralError(st.output.value, "step output is not declared");
    if (out->second == Kind::premise)
      throw StructuralError(st.output.value, "premise is produced by a step");
    if (!producer.emplace(st.output, i).second)
      throw StructuralError(st.output.value, "statement produced by two steps");
    if (st.inputs[0] == st.inputs[1])
      throw StructuralError(st.inputs[0].value, "step uses the same input twice");
    for (const auto& in : st.inputs) {
      auto k = kind.find(in);
      if (k == kind.end())
        throw StructuralError(in.value, "step input is not declared");
      if (k->second == Kind::goal)
        throw StructuralError(in.value, "goal used as a step input");
      if (in == st.output)
        throw StructuralError(in.value, "step output equals an input");
    }
  }
  for (const auto& m : intermediates)
    if (!producer.count(m.id))
      throw StructuralError(m.normalized, "intermediate is never produced");
  if (!producer.count(goal.id))
    throw StructuralError(goal.normalized, "goal is never produced");

  std::unordered_set<StatementId> consumed;
  for (const auto& st : steps)
    for (const auto& in : st.inputs) consumed.insert(in);
  for (const auto& p : premises)
    if (!consumed.count(p.id))
      throw StructuralError(p.normalized, "premise is not used by any step");
  for (const auto& m : intermediates)
    if (!consumed.count(m.id))
      throw StructuralError(m.normalized, "intermediate is not used by any step");

  // Stable topological order with cycle detection.
  std::unordered_map<StatementId, int> depth_of;
  for (const auto& p : premises) depth_of[p.id] = 0;
  std::vector<StepRecord> ordered;
  std::vector<bool> placed(steps.size(), false);
  while (ordered.size() < steps.size()) {
    bool progress = false;
    for (std::size_t i = 0; i < steps.size(); ++i) {
      if (placed[i]) continue;
      const auto& st = steps[i];
      auto a = depth_of.find(st.inputs[0]);
      auto b = depth_of.find(st.inputs[1]);
      if (a == depth_of.end() || b == depth_of.end()) continue;
      depth_of[st.output] = 1 + std::max(a->second, b->second);
      ordered.push_back(st);
      placed[i] = true;
      progress = true;
    }
    if (!progress) {
      for (std::size_t i = 0; i < steps.size(); ++i)
        if (!placed[i])
          throw StructuralError(steps[i].output.value,
                                "cyclic derivation through step output");
    }
  }

  EntailmentTree tree;
  tree.id_ = std::move(id);
  tree.premises_ = std::move(premises);
  tree.intermediates_ = std::move(intermediates);
  tree.steps_ = std::move(ordered);
  tree.goal_ = std::move(goal);
  tree.depth_ = depth_of.at(tree.goal_.id);
  for (std::size_t i = 0; i < tree.steps_.size(); ++i)
    tree.producer_[tree.steps_[i].output] = i;
  return tree;
}

const Statement* EntailmentTree::find(const StatementId& id) const {
  if (goal_.id == id) return &goal_;
  for (const auto& p : premises_)
    if (p.id == id) return &p;
  for (const auto& m : intermediates_)
    if (m.id == id) return &m;
  return nullptr;
}

const Statement& EntailmentTree::statement(const StatementId& id) const {
  const Statement* s = find(id);
  if (!s) throw NotFoundError("statement " + id.value + " not in tree " + id_);
  return *s;
}

std::vector<std::size_t> EntailmentTree::subtree_steps(
    const StatementId& root) const {
  std::vector<bool> used(steps_.size(), false);
  std::vector<StatementId> stack{root};
  if (!producer_.count(root))
    throw NotFoundError("no step produces " + root.value);
  while (!stack.empty()) {
    auto id = stack.back();
    stack.pop_back();
    auto it = producer_.find(id);
    if (it == producer_.end() || used[it->second]) continue;
    used[it->second] = true;
    for (const auto& in : steps_[it->second].inputs) stack.push_back(in);
  }
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < used.size(); ++i)
    if (used[i]) out.push_back(i);
  return out;
}

std::vector<std::size_t> EntailmentTree::subtree_premises(
    const StatementId& root) const {
  std::unordered_set<StatementId> inputs;
  for (auto i : subtree_steps(root))
    for (const auto& in : steps_[i].inputs) inputs.insert(in);
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < premises_.size(); ++i)
    if (inputs.count(premises_[i].id)) out.push_back(i);
  return out;
}

// --- slicing ---------------------------------------------------------------

std::vector<Treelet> slice_treelets(const EntailmentTree& tree) {
  std::vector<Treelet> out;
  for (const auto& root_step : tree.steps()) {
    const Statement& root = tree.statement(root_step.output);
    Statement sub_goal = Statement::make(root.text, Role::goal, Origin::dataset);

    std::vector<StepRecord> steps;
    std::vector<Statement> mids;
    for (auto i : tree.subtree_steps(root.id)) {
      StepRecord st = tree.steps()[i];
      st.validation.reset();
      if (st.output == root.id)
        st.output = sub_goal.id;
      else
        mids.push_back(tree.statement(st.output));
      steps.push_back(std::move(st));
    }
    std::vector<Statement> prems;
    for (auto i : tree.subtree_premises(root.id))
      prems.push_back(tree.premises()[i]);

    std::string sub_id = tree.id() + "@" + root.id.value.substr(1, 8);
    EntailmentTree sub = EntailmentTree::build(sub_id, prems, std::move(mids),
                                               std::move(steps), sub_goal);
    for (std::size_t k = 0; k < prems.size(); ++k) {
      Treelet t{.id = sub_id + "#" + std::to_string(k),
                .tree_id = tree.id(),
                .base = sub,
                .ablated_index = k,
                .missing = prems[k],
                .visible_premises = {},
                .full = root.id == tree.goal().id,
                .deductive_capable = false};
      for (std::size_t j = 0; j < prems.size(); ++j)
        if (j != k) t.visible_premises.push_back(prems[j]);
      t.deductive_capable = t.visible_premises.size() >= 2;
      out.push_back(std::move(t));
    }
  }
  return out;
}

// --- ProofTree -------------------------------------------------------------

const Statement& ProofTree::statement(const StatementId& id) const {
  if (root.id == id) return root;
  for (const auto& s : statements)
    if (s.id == id) return s;
  throw NotFoundError("statement " + id.value + " not in proof");
}

std::vector<StatementId> ProofTree::leaves() const {
  std::unordered_set<StatementId> produced;
  for (const auto& st : steps) produced.insert(st.output);
  std::vector<StatementId> out;
  std::unordered_set<StatementId> seen;
  for (const auto& st : steps)
    for (const auto& in : st.inputs)
      if (!produced.count(in) && seen.insert(in).second) out.push_back(in);
  return out;
}

namespace {

template <typename Lookup, typename Producer>
void dump(std::ostringstream& os, const StatementId& id, int indent,
          const Lookup& lookup, const Producer& producer) {
  const Statement& s = lookup(id);
  os << std::string(static_cast<std::size_t>(indent) * 2, ' ') << "["
     << to_string(s.role) << "] " << s.text << "\n";
  if (const StepRecord* st = producer(id))
    for (const auto& in : st->inputs) dump(os, in, indent + 1, lookup, producer);
}

}  // namespace

std::string render_tree(const EntailmentTree& tree) {
  std::ostringstream os;
  auto lookup = [&](const StatementId& id) -> const Statement& {
    return tree.statement(id);
  };
  auto producer = [&](const StatementId& id) -> const StepRecord* {
    for (const auto& st : tree.steps())
      if (st.output == id) return &st;
    return nullptr;
  };
  dump(os, tree.goal().id, 0, lookup, producer);
  return os.str();
}

std::string render_proof(const ProofTree& proof) {
  std::ostringstream os;
  auto lookup = [&](const StatementId& id) -> const Statement& {
    return proof.statement(id);
  };
  auto producer = [&](const StatementId& id) -> const StepRecord* {
    for (const auto& st : proof.steps)
      if (st.output == id) return &st;
    return nullptr;
  };
  dump(os, proof.root.id, 0, lookup, producer);
  return os.str();
}

}  // namespace adgv
