#include "adgv/search.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <future>

#include "adgv/errors.hpp"
#include "adgv/text.hpp"

namespace adgv {

using nlohmann::json;

std::string_view to_string(Mode mode) {
  switch (mode) {
    case Mode::DG: return "DG";
    case Mode::AG: return "AG";
    case Mode::ADG: return "ADG";
    case Mode::ADGV: return "ADGV";
  }
  return "?";
}

Mode mode_from_string(std::string_view name) {
  std::string upper;
  for (char c : name) upper.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  for (auto m : {Mode::DG, Mode::AG, Mode::ADG, Mode::ADGV})
    if (to_string(m) == upper) return m;
  throw ConfigError("unknown search mode '" + std::string(name) + "'");
}

bool uses_deduction(Mode mode) { return mode != Mode::AG; }
bool uses_abduction(Mode mode) { return mode != Mode::DG; }

Capabilities required_capabilities(Mode mode) {
  Capabilities caps;
  if (uses_deduction(mode)) caps.add(Capability::deduce);
  if (uses_abduction(mode)) caps.add(Capability::abduce);
  if (mode == Mode::ADGV) {
    caps.add(Capability::deduce);
    caps.add(Capability::abduce);
    caps.add(Capability::entail);
  }
  return caps;
}

void SearchConfig::validate() const {
  if (k_abductive < 1 || k_deductive < 1) throw ConfigError("sample counts must be at least 1");
  if (forward_budget < 0 || backward_budget < 0) throw ConfigError("budgets must be non-negative");
  validator_config.validate();
}

std::optional<FringeEntry> Fringe::pop() {
  if (heap_.empty()) return std::nullopt;
  FringeEntry top = heap_.top();
  heap_.pop();
  return top;
}

std::optional<FringeEntry> pop_best(Fringe& fringe) { return fringe.pop(); }

json EventRecord::to_json() const {
  json j{{"iter", iter},
         {"direction", to_string(direction)},
         {"pair", {pair[0].value, pair[1].value}},
         {"generations", generations},
         {"kept", kept},
         {"scores", scores},
         {"reasons", reasons}};
  if (!error.empty()) j["error"] = error;
  return j;
}

const Statement& SearchState::statement(const StatementId& id) const {
  auto it = statements.find(id);
  if (it == statements.end()) throw NotFoundError("search state has no statement " + id.value);
  return it->second;
}

bool eligible_pair(const Statement& a, const Statement& b, Direction direction) {
  auto forward = [](Role r) { return r == Role::premise || r == Role::intermediate; };
  if (direction == Direction::deductive) return forward(a.role) && forward(b.role);
  return (a.role == Role::goal || a.role == Role::hypothesis) && forward(b.role);
}

namespace {

using Pair = std::array<StatementId, 2>;

class SearchRun {
 public:
  SearchRun(const SearchConfig& config, const StepBackend& backend)
      : config_(config), backend_(backend) {}

  void init(std::span<const Statement> premises, const Statement& goal) {
    config_.validate();
    if (premises.empty()) throw ConfigError("search needs at least one premise");
    if (goal.role != Role::goal) throw ConfigError("goal statement must have role goal");
    state_.goal = goal.id;
    add_statement(goal);
    state_.seen_a.push_back(goal.id);
    state_.seen_a_text.insert(goal.normalized);
    for (const auto& p : premises) {
      if (p.role != Role::premise) throw ConfigError("premise '" + p.text + "' has the wrong role");
      if (state_.statements.count(p.id)) continue;
      add_statement(p);
      state_.premises.push_back(p.id);
      state_.seen_d.push_back(p.id);
      state_.seen_d_text.insert(p.normalized);
    }
    if (uses_deduction(config_.mode)) {
      std::vector<Pair> pairs;
      const auto& xs = state_.premises;
      for (std::size_t i = 0; i < xs.size(); ++i)
        for (std::size_t j = i + 1; j < xs.size(); ++j) pairs.push_back({xs[i], xs[j]});
      offer(Direction::deductive, std::move(pairs));
    }
    if (uses_abduction(config_.mode)) {
      std::vector<Pair> pairs;
      for (const auto& x : state_.premises) pairs.push_back({goal.id, x});
      offer(Direction::abductive, std::move(pairs));
    }
  }

  void run(const YieldCallback& on_yield) {
    bool stop = false;
    while (!stop) {
      bool do_d = uses_deduction(config_.mode) && !state_.fringe_d.empty() &&
                  state_.steps_taken_d < config_.forward_budget;
      bool do_a = uses_abduction(config_.mode) && !state_.fringe_a.empty() &&
                  state_.steps_taken_a < config_.backward_budget;
      if (!do_d && !do_a) break;
      int iter = ++state_.iterations;

      std::optional<FringeEntry> pd = do_d ? pop_best(state_.fringe_d) : std::nullopt;
      std::optional<FringeEntry> pa = do_a ? pop_best(state_.fringe_a) : std::nullopt;

      Sample sd, sa;
      auto sample_d = [&] {
        const auto& a = state_.statement(pd->pair[0]);
        const auto& b = state_.statement(pd->pair[1]);
        return call([&] { return backend_.deduce(a.text, b.text, config_.k_deductive, Decode::sample); },
                    config_.k_deductive);
      };
      auto sample_a = [&] {
        const auto& c = state_.statement(pa->pair[0]);
        const auto& x = state_.statement(pa->pair[1]);
        return call([&] { return backend_.abduce(x.text, c.text, config_.k_abductive, Decode::sample); },
                    config_.k_abductive);
      };
      if (pd && pa && config_.parallel_sampling && backend_.thread_safe()) {
        auto fut = std::async(std::launch::async, sample_a);
        sd = sample_d();
        sa = fut.get();
      } else {
        if (pd) sd = sample_d();
        if (pa) sa = sample_a();
      }

      if (pd) {
        std::size_t kept = process_deductive(iter, *pd, sd);
        if (kept > 0 || config_.consume_budget_on_empty) ++state_.steps_taken_d;
      }
      if (pa) {
        std::size_t kept = process_abductive(iter, *pa, sa, on_yield, stop);
        if (kept > 0 || config_.consume_budget_on_empty) ++state_.steps_taken_a;
      }
    }
  }

  SearchState take() { return std::move(state_); }

 private:
  struct Sample {
    std::vector<std::string> generations;
    std::string error;
  };

  template <typename F>
  Sample call(F&& f, int n) {
    Sample s;
    try {
      s.generations = f();
      if (static_cast<int>(s.generations.size()) > n) s.generations.resize(static_cast<std::size_t>(n));
    } catch (const BackendError& e) {
      s.error = e.what();
    }
    return s;
  }

  void add_statement(const Statement& s) {
    state_.statements.emplace(s.id, s);
    state_.lineage.add_root(s.id);
  }

  bool admissible(const Pair& p, Direction dir) const {
    if (p[0] == p[1]) return false;
    if (!eligible_pair(state_.statement(p[0]), state_.statement(p[1]), dir)) return false;
    if (config_.validator_config.is_enabled(ValidatorName::consanguinity) &&
        !consanguinity_ok(p[0], p[1], config_.validator_config.eta, state_.lineage))
      return false;
    return true;
  }

  void offer(Direction dir, std::vector<Pair> candidates) {
    std::vector<Pair> pairs;
    for (auto& p : candidates) {
      if (!admissible(p, dir)) continue;
      if (dir == Direction::deductive && p[1] < p[0]) std::swap(p[0], p[1]);
      pairs.push_back(std::move(p));
    }
    if (pairs.empty()) return;

    bool deductive = dir == Direction::deductive;
    Capability cap = deductive ? Capability::heuristic_d : Capability::heuristic_a;
    std::vector<double> scores(pairs.size(), 0.0);
    if (backend_.capabilities().has(cap)) {
      std::vector<TextPair> texts;
      for (const auto& p : pairs) texts.push_back({state_.statement(p[0]).text, state_.statement(p[1]).text});
      std::optional<std::string> goal = state_.statement(state_.goal).text;
      try {
        auto got = backend_.heuristic(deductive ? HeuristicKind::deductive : HeuristicKind::abductive,
                                      goal, texts);
        if (got.size() == pairs.size()) scores = std::move(got);
        else ++state_.backend_errors;
      } catch (const BackendError&) {
        ++state_.backend_errors;
      }
    }
    Fringe& fringe = deductive ? state_.fringe_d : state_.fringe_a;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      double priority = std::isfinite(scores[i]) ? scores[i] : 0.0;
      fringe.push({pairs[i], priority, state_.next_insertion++});
    }
  }

  std::size_t process_deductive(int iter, const FringeEntry& entry, const Sample& sample) {
    EventRecord ev{iter, Direction::deductive, entry.pair, sample.generations, {}, {}, {}, sample.error};
    if (!sample.error.empty()) ++state_.backend_errors;
    const Statement a = state_.statement(entry.pair[0]);
    const Statement b = state_.statement(entry.pair[1]);
    const std::string inputs[] = {a.text, b.text};
    const Statement& goal = state_.statement(state_.goal);
    std::size_t kept = 0;

    for (const auto& y : sample.generations) {
      std::string reason;
      double score = 0.0;
      if (!dedup(y, inputs, state_.seen_d_text)) {
        reason = "duplicate";
      } else if (normalize(y) == goal.normalized) {
        reason = "goal";
      } else if (config_.mode == Mode::ADGV &&
                 config_.validator_config.is_enabled(ValidatorName::abductive_agreement)) {
        auto vr = validate_deductive(a.text, b.text, y, backend_, config_.validator_config);
        score = vr.score;
        if (!vr.passed) reason = vr.error.empty() ? "abductive-agreement" : "backend-error: " + vr.error;
      }
      ev.kept.push_back(reason.empty());
      ev.scores.push_back(score);
      ev.reasons.push_back(reason);
      if (!reason.empty()) continue;

      ++kept;
      Statement yd = Statement::make(y, Role::intermediate, Origin::deductive_step);
      StepRecord step{Direction::deductive, entry.pair, yd.id, Validation{score, true, {}}};
      add_statement(yd);
      state_.lineage.add_step(step);
      state_.events.push_back(step);
      state_.seen_d.push_back(yd.id);
      state_.seen_d_text.insert(yd.normalized);

      if (uses_deduction(config_.mode)) {
        std::vector<Pair> pairs;
        for (const auto& s : state_.seen_d) pairs.push_back({yd.id, s});
        offer(Direction::deductive, std::move(pairs));
      }
      if (uses_abduction(config_.mode)) {
        std::vector<Pair> pairs;
        for (const auto& c : state_.seen_a) pairs.push_back({c, yd.id});
        offer(Direction::abductive, std::move(pairs));
      }
    }
    state_.log.push_back(std::move(ev));
    return kept;
  }

  std::size_t process_abductive(int iter, const FringeEntry& entry, const Sample& sample,
                                const YieldCallback& on_yield, bool& stop) {
    EventRecord ev{iter, Direction::abductive, entry.pair, sample.generations, {}, {}, {}, sample.error};
    if (!sample.error.empty()) ++state_.backend_errors;
    const Statement c = state_.statement(entry.pair[0]);
    const Statement x = state_.statement(entry.pair[1]);
    const std::string inputs[] = {c.text, x.text};
    std::size_t kept = 0;

    for (const auto& y : sample.generations) {
      std::string reason;
      double score = 0.0;
      if (!dedup(y, inputs, state_.seen_a_text)) {
        reason = "duplicate";
      } else if (config_.mode == Mode::ADGV &&
                 config_.validator_config.is_enabled(ValidatorName::deductive_agreement)) {
        auto vr = validate_abductive(c.text, x.text, y, backend_, config_.validator_config);
        score = vr.score;
        if (!vr.passed) reason = vr.error.empty() ? "deductive-agreement" : "backend-error: " + vr.error;
      }
      ev.kept.push_back(reason.empty());
      ev.scores.push_back(score);
      ev.reasons.push_back(reason);
      if (!reason.empty()) continue;

      ++kept;
      Statement ya = Statement::make(y, Role::hypothesis, Origin::abductive_step);
      StepRecord step{Direction::abductive, entry.pair, ya.id, Validation{score, true, {}}};
      add_statement(ya);
      state_.lineage.add_step(step);
      state_.events.push_back(step);
      state_.yielded.push_back(ya.id);
      state_.seen_a.push_back(ya.id);
      state_.seen_a_text.insert(ya.normalized);
      if (on_yield && !on_yield(ya)) stop = true;

      std::vector<Pair> pairs;
      for (const auto& s : state_.seen_d) pairs.push_back({ya.id, s});
      offer(Direction::abductive, std::move(pairs));
    }
    state_.log.push_back(std::move(ev));
    return kept;
  }

  const SearchConfig& config_;
  const StepBackend& backend_;
  SearchState state_;
};

}  // namespace

SearchState init_fringes(std::span<const Statement> premises, const Statement& goal,
                         const SearchConfig& config, const StepBackend& backend) {
  SearchRun run(config, backend);
  run.init(premises, goal);
  return run.take();
}

SearchState adgv_search(std::span<const Statement> premises, const Statement& goal,
                        const SearchConfig& config, const StepBackend& backend,
                        const YieldCallback& on_yield) {
  auto missing = required_capabilities(config.mode);
  auto have = backend.capabilities();
  for (auto c : {Capability::deduce, Capability::abduce, Capability::entail})
    if (missing.has(c) && !have.has(c))
      throw ConfigError("backend " + backend.identity() + " lacks capability " +
                        std::string(to_string(c)) + " required by mode " +
                        std::string(to_string(config.mode)));
  SearchRun run(config, backend);
  run.init(premises, goal);
  run.run(on_yield);
  return run.take();
}

// --- proof assembly --------------------------------------------------------

ProofTree assemble_proof(const StatementId& hypothesis, const SearchState& state) {
  auto it = state.statements.find(hypothesis);
  if (it == state.statements.end() || it->second.role != Role::hypothesis)
    throw IntegrityError("'" + hypothesis.value + "' is not a hypothesis of this search");

  std::vector<const StepRecord*> chain;
  StatementId cur = hypothesis;
  while (true) {
    const StepRecord* step = state.lineage.producer(cur);
    if (!step || step->direction != Direction::abductive)
      throw IntegrityError("no abductive step produces " + cur.value);
    if (chain.size() > state.events.size())
      throw IntegrityError("abductive chain from " + hypothesis.value + " does not terminate");
    chain.push_back(step);
    cur = step->conclusion_slot();
    if (cur == state.goal) break;
    if (!state.statements.count(cur))
      throw IntegrityError("abductive chain references unknown statement " + cur.value);
  }

  ProofTree proof;
  proof.root = state.statement(state.goal);
  proof.recovered = hypothesis;
  std::unordered_set<StatementId> derived;
  std::unordered_set<StatementId> listed{state.goal};

  auto note = [&](const StatementId& id) {
    if (listed.insert(id).second) proof.statements.push_back(state.statement(id));
  };
  std::function<void(const StatementId&)> derive = [&](const StatementId& id) {
    note(id);
    const Statement& s = state.statement(id);
    if (s.role != Role::intermediate || derived.count(id)) return;
    const StepRecord* step = state.lineage.producer(id);
    if (!step || step->direction != Direction::deductive)
      throw IntegrityError("no deductive step produces intermediate " + id.value);
    for (const auto& in : step->inputs) derive(in);
    derived.insert(id);
    StepRecord copy = *step;
    proof.steps.push_back(std::move(copy));
  };

  for (const StepRecord* step : chain) {
    derive(step->premise_slot());
    note(step->output);
    note(step->conclusion_slot());
    StepRecord deductive = invert(*step);
    deductive.validation = step->validation;
    proof.steps.push_back(std::move(deductive));
  }
  return proof;
}

}  // namespace adgv
