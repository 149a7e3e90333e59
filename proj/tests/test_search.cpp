#include <doctest.h>

#include <algorithm>
#include <atomic>

#include "adgv/errors.hpp"
#include "adgv/oracle.hpp"
#include "adgv/search.hpp"
#include "support.hpp"

using namespace adgv;
using namespace testing;

namespace {

SearchConfig config(Mode mode, int fwd = 25, int back = 25) {
  SearchConfig c;
  c.mode = mode;
  c.forward_budget = fwd;
  c.backward_budget = back;
  return c;
}

std::vector<std::string> yielded_texts(const SearchState& s) {
  std::vector<std::string> out;
  for (const auto& id : s.yielded) out.push_back(s.statement(id).normalized);
  return out;
}

bool contains(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

// Hand-built search state for proof assembly.
struct Builder {
  SearchState state;

  explicit Builder(const Statement& g) {
    state.goal = g.id;
    add(g);
  }
  void add(const Statement& s) {
    state.statements.emplace(s.id, s);
    state.lineage.add_root(s.id);
  }
  void step(const StepRecord& st) {
    state.lineage.add_step(st);
    state.events.push_back(st);
  }
};

// Wraps the oracle and fails every call once `fail_after` calls are made.
class Flaky final : public StepBackend {
 public:
  Flaky(const StepBackend& inner, int fail_after) : inner_(inner), left_(fail_after) {}
  Capabilities capabilities() const override { return inner_.capabilities(); }
  std::string identity() const override { return "flaky"; }
  std::vector<std::string> deduce(const std::string& a, const std::string& b, int n, Decode m) const override {
    tick();
    return inner_.deduce(a, b, n, m);
  }
  std::vector<std::string> abduce(const std::string& a, const std::string& b, int n, Decode m) const override {
    tick();
    return inner_.abduce(a, b, n, m);
  }
  double entail(const std::string& a, const std::string& b) const override { return inner_.entail(a, b); }
  std::vector<double> heuristic(HeuristicKind k, const std::optional<std::string>& g,
                                std::span<const TextPair> p) const override {
    return inner_.heuristic(k, g, p);
  }

 private:
  void tick() const {
    if (left_-- <= 0) throw BackendError("connection reset");
  }
  const StepBackend& inner_;
  mutable std::atomic<int> left_;
};

class NoAbduce final : public StepBackend {
 public:
  Capabilities capabilities() const override {
    return {Capability::deduce, Capability::entail, Capability::heuristic_d};
  }
  std::string identity() const override { return "no-abduce"; }
  std::vector<std::string> deduce(const std::string&, const std::string&, int, Decode) const override {
    return {};
  }
  std::vector<std::string> abduce(const std::string&, const std::string&, int, Decode) const override {
    return {};
  }
  double entail(const std::string&, const std::string&) const override { return 0.0; }
  std::vector<double> heuristic(HeuristicKind, const std::optional<std::string>&,
                                std::span<const TextPair> p) const override {
    return std::vector<double>(p.size(), 0.0);
  }
};

}  // namespace

TEST_SUITE("search") {

TEST_CASE("mode names") {
  for (auto m : {Mode::DG, Mode::AG, Mode::ADG, Mode::ADGV}) CHECK(mode_from_string(to_string(m)) == m);
  CHECK(mode_from_string("adgv") == Mode::ADGV);
  CHECK_THROWS_AS(mode_from_string("bfs"), ConfigError);
  CHECK(uses_deduction(Mode::DG));
  CHECK_FALSE(uses_abduction(Mode::DG));
  CHECK_FALSE(uses_deduction(Mode::AG));
}

TEST_CASE("config validation") {
  auto c = config(Mode::ADGV);
  c.k_abductive = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = config(Mode::ADGV, -1, 2);
  CHECK_THROWS_AS(c.validate(), ConfigError);
  CHECK_NOTHROW(config(Mode::ADGV, 0, 0).validate());
}

TEST_CASE("pop_best") {
  Fringe f;
  CHECK_FALSE(pop_best(f));
  f.push({{StatementId{"a"}, StatementId{"b"}}, 0.2, 0});
  f.push({{StatementId{"c"}, StatementId{"d"}}, 0.9, 1});
  f.push({{StatementId{"e"}, StatementId{"f"}}, 0.9, 2});
  auto first = pop_best(f);
  CHECK(first->priority == 0.9);
  CHECK(first->inserted_at == 1);
  CHECK(f.size() == 2);
  CHECK(pop_best(f)->inserted_at == 2);
  CHECK(pop_best(f)->priority == 0.2);
  CHECK(f.empty());
}

TEST_CASE("init_fringes sizes") {
  OracleBackend b{OracleWorld{}};
  auto g = goal("a cat has fur");
  std::vector<Statement> three{prem("a cat is a kind of mammal"), prem("a mammal has fur"),
                               prem("a dog has fur")};
  auto s = init_fringes(three, g, config(Mode::ADGV), b);
  CHECK(s.fringe_d.size() == 3);
  CHECK(s.fringe_a.size() == 3);
  CHECK(s.seen_d.size() == 3);
  CHECK(s.seen_a == std::vector<StatementId>{g.id});

  std::vector<Statement> one{prem("a cat is a kind of mammal")};
  auto s1 = init_fringes(one, g, config(Mode::ADGV), b);
  CHECK(s1.fringe_d.size() == 0);
  CHECK(s1.fringe_a.size() == 1);

  std::vector<Statement> four{prem("p one"), prem("p two"), prem("p three"), prem("p four")};
  auto ag = init_fringes(four, g, config(Mode::AG), b);
  CHECK(ag.fringe_d.empty());
  CHECK(ag.fringe_a.size() == 4);
  auto dg = init_fringes(four, g, config(Mode::DG), b);
  CHECK(dg.fringe_d.size() == 6);
  CHECK(dg.fringe_a.empty());

  CHECK_THROWS_AS(init_fringes(std::vector<Statement>{}, g, config(Mode::ADGV), b), ConfigError);
}

TEST_CASE("init_fringes scores entries with the heuristic") {
  OracleBackend b{OracleWorld{}};
  auto g = goal("a cat has fur");
  std::vector<Statement> xs{prem("a dog has scales"), prem("a cat is a kind of mammal")};
  auto s = init_fringes(xs, g, config(Mode::AG), b);
  auto top = pop_best(s.fringe_a);
  CHECK(top->priority == 1.0);
  CHECK(s.statement(top->pair[1]).normalized == "a cat is a kind of mammal");
  CHECK(pop_best(s.fringe_a)->priority == 0.0);
}

TEST_CASE("eligible_pair follows the allowed input table") {
  auto x = prem("x x"), yd = mid("y d"), g = goal("g g"), ya = hyp("y a"), ya2 = hyp("y a two");
  auto D = Direction::deductive, A = Direction::abductive;
  CHECK(eligible_pair(x, x, D));
  CHECK(eligible_pair(x, yd, D));
  CHECK(eligible_pair(yd, yd, D));
  CHECK_FALSE(eligible_pair(ya, ya2, D));
  CHECK_FALSE(eligible_pair(x, ya, D));
  CHECK_FALSE(eligible_pair(g, x, D));
  CHECK(eligible_pair(g, x, A));
  CHECK(eligible_pair(g, yd, A));
  CHECK(eligible_pair(ya, x, A));
  CHECK(eligible_pair(ya, yd, A));
  CHECK_FALSE(eligible_pair(yd, ya, A));
  CHECK_FALSE(eligible_pair(x, g, A));
  CHECK_FALSE(eligible_pair(g, ya, A));
}

TEST_CASE("single inversion recovers the missing premise") {
  OracleBackend b{OracleWorld{}};
  std::vector<Statement> xs{prem("a cat is a kind of mammal")};
  auto g = goal("a cat has fur");
  auto s = adgv_search(xs, g, config(Mode::ADGV, 2, 2), b);
  REQUIRE_FALSE(s.log.empty());
  CHECK(s.log[0].direction == Direction::abductive);
  CHECK(s.log[0].generations == std::vector<std::string>{"a mammal has fur"});
  CHECK(contains(yielded_texts(s), "a mammal has fur"));
  CHECK(s.steps_taken_a <= 2);

  auto dg = adgv_search(xs, g, config(Mode::DG, 2, 2), b);
  CHECK(dg.yielded.empty());
}

TEST_CASE("deduction feeds abduction") {
  OracleBackend b{OracleWorld{}};
  std::vector<Statement> xs{prem("a cat is a kind of mammal"), prem("a mammal is a kind of animal")};
  auto g = goal("a cat has warm-blood");
  auto s = adgv_search(xs, g, config(Mode::ADGV, 4, 4), b);
  CHECK(s.log[0].direction == Direction::deductive);
  CHECK(s.log[0].generations == std::vector<std::string>{"a cat is a kind of animal"});
  auto ys = yielded_texts(s);
  CHECK(contains(ys, "a animal has warm-blood"));

  bool via_intermediate = false;
  for (const auto& ev : s.log)
    if (ev.direction == Direction::abductive &&
        s.statement(ev.pair[1]).normalized == "a cat is a kind of animal" &&
        contains(ev.generations, "a animal has warm-blood"))
      via_intermediate = true;
  CHECK(via_intermediate);

  auto hid = std::find_if(s.yielded.begin(), s.yielded.end(), [&](const StatementId& id) {
    return s.statement(id).normalized == "a animal has warm-blood";
  });
  auto proof = assemble_proof(*hid, s);
  CHECK(proof.length() >= 2);
  auto leaves = proof.leaves();
  std::set<std::string> leaf_text;
  for (const auto& l : leaves) leaf_text.insert(proof.statement(l).normalized);
  CHECK(leaf_text.count("a animal has warm-blood"));
  for (const auto& l : leaf_text)
    CHECK((l == "a animal has warm-blood" || l == "a cat is a kind of mammal" ||
           l == "a mammal is a kind of animal"));

  CHECK(adgv_search(xs, g, config(Mode::DG, 4, 4), b).yielded.empty());
}

TEST_CASE("modes gate the fringes") {
  OracleBackend b{OracleWorld{}};
  std::vector<Statement> xs{prem("a cat is a kind of mammal"), prem("a mammal is a kind of animal")};
  auto g = goal("a cat has warm-blood");
  for (const auto& ev : adgv_search(xs, g, config(Mode::AG), b).log)
    CHECK(ev.direction == Direction::abductive);
  for (const auto& ev : adgv_search(xs, g, config(Mode::DG), b).log)
    CHECK(ev.direction == Direction::deductive);
  for (const auto& ev : adgv_search(xs, g, config(Mode::ADG), b).log)
    for (auto score : ev.scores) CHECK(score == 0.0);
}

TEST_CASE("budgets bound the pops") {
  OracleWorld w;
  auto suite = generate_oracle_suite(w, 3, 10, 21);
  OracleBackend b(w);
  for (const auto& t : suite)
    for (int budget : {0, 1, 3}) {
      auto s = adgv_search(t.visible_premises, t.base.goal(), config(Mode::ADGV, budget, budget), b);
      int d = 0, a = 0;
      for (const auto& ev : s.log) (ev.direction == Direction::deductive ? d : a)++;
      CHECK(d <= budget);
      CHECK(a <= budget);
      CHECK(s.steps_taken_d == d);
      CHECK(s.steps_taken_a == a);
    }
}

TEST_CASE("budget is kept for empty pops when configured") {
  OracleBackend b{OracleWorld{}};
  std::vector<Statement> xs{prem("a pig has tails"), prem("a cow has horns")};
  auto g = goal("a cat has fur");
  auto c = config(Mode::ADGV, 5, 5);
  auto s = adgv_search(xs, g, c, b);
  CHECK(s.steps_taken_a == 2);
  c.consume_budget_on_empty = false;
  auto s2 = adgv_search(xs, g, c, b);
  CHECK(s2.steps_taken_a == 0);
  CHECK(s2.log.size() == s.log.size());
}

TEST_CASE("backend failure prunes the pair and the search continues") {
  OracleBackend inner{OracleWorld{}};
  std::vector<Statement> xs{prem("a cat is a kind of mammal"), prem("a mammal is a kind of animal")};
  auto g = goal("a cat has warm-blood");
  Flaky flaky(inner, 0);
  auto s = adgv_search(xs, g, config(Mode::ADGV, 3, 3), flaky);
  CHECK(s.yielded.empty());
  CHECK(s.backend_errors > 0);
  for (const auto& ev : s.log) CHECK(ev.error == "connection reset");
  CHECK(s.steps_taken_a == 2);
}

TEST_CASE("missing capability is a configuration error") {
  NoAbduce b;
  std::vector<Statement> xs{prem("p one"), prem("p two")};
  CHECK_THROWS_AS(adgv_search(xs, goal("g g"), config(Mode::ADGV), b), ConfigError);
  CHECK_NOTHROW(adgv_search(xs, goal("g g"), config(Mode::DG), b));
}

TEST_CASE("yield callback can stop the search") {
  OracleWorld w;
  auto suite = generate_oracle_suite(w, 2, 5, 4);
  OracleBackend b(w);
  for (const auto& t : suite) {
    int calls = 0;
    auto s = adgv_search(t.visible_premises, t.base.goal(), config(Mode::ADGV), b,
                         [&](const Statement& h) {
                           ++calls;
                           CHECK(h.role == Role::hypothesis);
                           return false;
                         });
    if (calls > 0) CHECK(s.yielded.size() >= 1);
    auto full = adgv_search(t.visible_premises, t.base.goal(), config(Mode::ADGV), b);
    CHECK(full.yielded.size() >= s.yielded.size());
  }
}

TEST_CASE("replays are identical") {
  OracleWorld w;
  auto suite = generate_oracle_suite(w, 2, 8, 12);
  OracleBackend b(w);
  for (const auto& t : suite) {
    auto c = config(Mode::ADGV, 6, 6);
    auto a = adgv_search(t.visible_premises, t.base.goal(), c, b);
    c.parallel_sampling = false;
    auto d = adgv_search(t.visible_premises, t.base.goal(), c, b);
    REQUIRE(a.log.size() == d.log.size());
    for (std::size_t i = 0; i < a.log.size(); ++i)
      CHECK(a.log[i].to_json().dump() == d.log[i].to_json().dump());
    CHECK(a.yielded == d.yielded);
  }
}

TEST_CASE("event json") {
  EventRecord ev{3, Direction::abductive, {StatementId{"bx"}, StatementId{"fy"}}, {"h h"}, {true}, {1.0}, {""}, ""};
  auto j = ev.to_json();
  CHECK(j["iter"] == 3);
  CHECK(j["direction"] == "abductive");
  CHECK(j["pair"] == nlohmann::json::array({"bx", "fy"}));
  CHECK(j["kept"][0] == true);
  CHECK_FALSE(j.contains("error"));
}

TEST_CASE("assemble_proof: single inversion") {
  auto g = goal("g g"), x1 = prem("x one");
  auto h = hyp("h one");
  Builder bld(g);
  bld.add(x1);
  bld.add(h);
  bld.step(abd(g, x1, h));
  auto p = assemble_proof(h.id, bld.state);
  REQUIRE(p.steps.size() == 1);
  CHECK(same_step(p.steps[0], ded(x1, h, g)));
  CHECK(p.recovered == h.id);
}

TEST_CASE("assemble_proof: abductive chain") {
  auto g = goal("g g"), x1 = prem("x one"), x2 = prem("x two");
  auto h1 = hyp("h one"), h2 = hyp("h two");
  Builder bld(g);
  for (const auto& s : {x1, x2, h1, h2}) bld.add(s);
  bld.step(abd(g, x1, h1));
  bld.step(abd(h1, x2, h2));
  auto p = assemble_proof(h2.id, bld.state);
  REQUIRE(p.steps.size() == 2);
  CHECK(same_step(p.steps[0], ded(x2, h2, h1)));
  CHECK(same_step(p.steps[1], ded(x1, h1, g)));
  auto leaves = p.leaves();
  CHECK(std::set<StatementId>(leaves.begin(), leaves.end()) ==
        std::set<StatementId>{x1.id, x2.id, h2.id});
}

TEST_CASE("assemble_proof: deductive step feeding an abductive step") {
  auto g = goal("g g"), x1 = prem("x one"), x2 = prem("x two");
  auto i = mid("i i");
  auto h = hyp("h h");
  Builder bld(g);
  for (const auto& s : {x1, x2, i, h}) bld.add(s);
  bld.step(ded(x1, x2, i));
  bld.step(abd(g, i, h));
  auto p = assemble_proof(h.id, bld.state);
  REQUIRE(p.steps.size() == 2);
  CHECK(same_step(p.steps[0], ded(x1, x2, i)));
  CHECK(same_step(p.steps[1], ded(i, h, g)));
  auto leaves = p.leaves();
  CHECK(std::set<StatementId>(leaves.begin(), leaves.end()) ==
        std::set<StatementId>{x1.id, x2.id, h.id});
}

TEST_CASE("assemble_proof: broken chains are integrity errors") {
  auto g = goal("g g"), x1 = prem("x one");
  auto h1 = hyp("h one"), h2 = hyp("h two");
  Builder bld(g);
  for (const auto& s : {x1, h1, h2}) bld.add(s);
  bld.step(abd(h1, x1, h2));
  CHECK_THROWS_AS(assemble_proof(h2.id, bld.state), IntegrityError);
  CHECK_THROWS_AS(assemble_proof(x1.id, bld.state), IntegrityError);
  CHECK_THROWS_AS(assemble_proof(hyp("unknown").id, bld.state), IntegrityError);
}

TEST_CASE("every yielded hypothesis assembles") {
  OracleWorld w;
  auto suite = generate_oracle_suite(w, 3, 15, 77);
  OracleBackend b(w);
  for (const auto& t : suite) {
    auto s = adgv_search(t.visible_premises, t.base.goal(), config(Mode::ADGV, 10, 10), b);
    for (const auto& id : s.yielded) {
      auto p = assemble_proof(id, s);
      CHECK(p.root.id == t.base.goal().id);
      for (const auto& st : p.steps) CHECK(st.direction == Direction::deductive);
      for (const auto& leaf : p.leaves()) {
        const auto& ls = p.statement(leaf);
        CHECK((ls.role == Role::premise || leaf == id));
      }
    }
  }
}

TEST_CASE("unbudgeted yields equal the brute-force backward closure") {
  for (int depth = 1; depth <= 3; ++depth) {
    OracleWorld w;
    auto suite = generate_oracle_suite(w, depth, 20, 70 + depth);
    OracleBackend b(w);
    SearchConfig c;
    c.forward_budget = 100000;
    c.backward_budget = 100000;
    for (const auto& t : suite) {
      auto s = adgv_search(t.visible_premises, t.base.goal(), c, b);
      std::set<std::string> got;
      for (const auto& y : s.yielded) got.insert(s.statement(y).normalized);
      std::vector<std::string> visible;
      for (const auto& v : t.visible_premises) visible.push_back(v.text);
      auto ref = brute_force_hypotheses(w, visible, t.base.goal().text);
      CHECK(got == ref);
      CHECK(ref.count(normalize(t.missing.text)) == 1);
    }
  }
}

}
