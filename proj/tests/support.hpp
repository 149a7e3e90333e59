#pragma once

#include <algorithm>
#include <regex>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "adgv/oracle.hpp"
#include "adgv/text.hpp"
#include "adgv/tree.hpp"

namespace testing {

using adgv::Origin;
using adgv::Role;
using adgv::Statement;
using adgv::StepRecord;

inline Statement prem(const std::string& t) {
  return Statement::make(t, Role::premise, Origin::dataset);
}
inline Statement mid(const std::string& t) {
  return Statement::make(t, Role::intermediate, Origin::deductive_step);
}
inline Statement goal(const std::string& t) {
  return Statement::make(t, Role::goal, Origin::dataset);
}
inline Statement hyp(const std::string& t) {
  return Statement::make(t, Role::hypothesis, Origin::abductive_step);
}

inline StepRecord ded(const Statement& a, const Statement& b, const Statement& c) {
  return StepRecord{adgv::Direction::deductive, {a.id, b.id}, c.id, std::nullopt};
}
inline StepRecord abd(const Statement& c, const Statement& x, const Statement& h) {
  return StepRecord{adgv::Direction::abductive, {c.id, x.id}, h.id, std::nullopt};
}

// (x1,x2 -> g)
inline adgv::EntailmentTree one_step_tree() {
  auto x1 = prem("a cat is a kind of mammal");
  auto x2 = prem("a mammal has fur");
  auto g = goal("a cat has fur");
  return adgv::EntailmentTree::build("one", {x1, x2}, {}, {ded(x1, x2, g)}, g);
}

// (x1,x2 -> i1), (i1,x3 -> g)
inline adgv::EntailmentTree chain_tree() {
  auto x1 = prem("a cat is a kind of mammal");
  auto x2 = prem("a mammal is a kind of animal");
  auto x3 = prem("a animal has warm-blood");
  auto i1 = mid("a cat is a kind of animal");
  auto g = goal("a cat has warm-blood");
  return adgv::EntailmentTree::build("chain", {x1, x2, x3}, {i1},
                                     {ded(x1, x2, i1), ded(i1, x3, g)}, g);
}

// Five premises, four steps: (p1,p2->i1), (i1,p3->i2), (p4,p5->i3), (i2,i3->g).
inline adgv::EntailmentTree fig3_tree() {
  auto p1 = prem("a robin is a kind of bird");
  auto p2 = prem("a bird is a kind of vertebrate");
  auto p3 = prem("a vertebrate is a kind of animal");
  auto p4 = prem("a animal is a kind of organism");
  auto p5 = prem("a organism has cells");
  auto i1 = mid("a robin is a kind of vertebrate");
  auto i2 = mid("a robin is a kind of animal");
  auto i3 = mid("a animal has cells");
  auto g = goal("a robin has cells");
  return adgv::EntailmentTree::build(
      "fig3", {p1, p2, p3, p4, p5}, {i1, i2, i3},
      {ded(p1, p2, i1), ded(i1, p3, i2), ded(p4, p5, i3), ded(i2, i3, g)}, g);
}

inline bool same_structure(const adgv::EntailmentTree& a, const adgv::EntailmentTree& b) {
  auto same_stmts = [](const std::vector<Statement>& x, const std::vector<Statement>& y) {
    if (x.size() != y.size()) return false;
    for (std::size_t i = 0; i < x.size(); ++i)
      if (x[i].id != y[i].id || x[i].text != y[i].text || x[i].role != y[i].role ||
          x[i].synthetic != y[i].synthetic)
        return false;
    return true;
  };
  if (a.id() != b.id() || a.goal().id != b.goal().id || a.depth() != b.depth()) return false;
  if (!same_stmts(a.premises(), b.premises())) return false;
  auto by_id = [](std::vector<Statement> v) {
    std::sort(v.begin(), v.end(), [](const Statement& x, const Statement& y) { return x.id < y.id; });
    return v;
  };
  if (!same_stmts(by_id(a.intermediates()), by_id(b.intermediates()))) return false;
  if (a.steps().size() != b.steps().size()) return false;
  for (std::size_t i = 0; i < a.steps().size(); ++i)
    if (!adgv::same_step(a.steps()[i], b.steps()[i])) return false;
  return true;
}

#ifdef ADGV_TEST_DATA_DIR
inline std::string data_path(const std::string& name) {
  return std::string(ADGV_TEST_DATA_DIR) + "/" + name;
}
#endif

// --- independent brute-force reference -------------------------------------
//
// Atoms are (kind, subject, object) with kind 'i' for is_a and 'h' for has.
// Parsing and both rules are written out here without touching the library
// so the search can be checked against them.

struct RefAtom {
  char kind;
  std::string s, o;
  auto operator<=>(const RefAtom&) const = default;
};

struct RefWorld {
  std::set<std::string> entities, classes, properties;

  explicit RefWorld(const adgv::OracleWorld& w)
      : entities(w.entities), classes(w.classes), properties(w.properties) {}

  bool closed() const { return !entities.empty() || !classes.empty() || !properties.empty(); }

  bool ok(const RefAtom& a) const {
    if (a.kind == 'i' && a.s == a.o) return false;
    if (!closed()) return true;
    bool subj = entities.count(a.s) || classes.count(a.s);
    bool obj = a.kind == 'i' ? classes.count(a.o) > 0 : properties.count(a.o) > 0;
    return subj && obj;
  }

  std::optional<RefAtom> parse(const std::string& text) const {
    static const std::regex isa(R"(^a (\S+) is a kind of (\S+)$)");
    static const std::regex hs(R"(^a (\S+) has (\S+)$)");
    std::smatch m;
    std::string n = adgv::normalize(text);
    std::optional<RefAtom> a;
    if (std::regex_match(n, m, isa)) a = RefAtom{'i', m[1], m[2]};
    else if (std::regex_match(n, m, hs)) a = RefAtom{'h', m[1], m[2]};
    if (a && !ok(*a)) a.reset();
    return a;
  }

  static std::string render(const RefAtom& a) {
    return a.kind == 'i' ? "a " + a.s + " is a kind of " + a.o : "a " + a.s + " has " + a.o;
  }

  std::set<RefAtom> forward(const RefAtom& a, const RefAtom& b) const {
    std::set<RefAtom> out;
    for (auto [p, q] : {std::pair{&a, &b}, std::pair{&b, &a}}) {
      if (p->kind != 'i' || p->o != q->s) continue;
      RefAtom c{q->kind, p->s, q->o};
      if (ok(c)) out.insert(c);
    }
    return out;
  }

  // Every well-formed h with c in forward(x, h), found by enumerating the
  // shapes h can take.
  std::set<RefAtom> backward(const RefAtom& x, const RefAtom& c) const {
    std::set<RefAtom> cand;
    if (c.kind == 'i') {
      if (x.kind == 'i' && x.s == c.s) cand.insert({'i', x.o, c.o});
      if (x.kind == 'i' && x.o == c.o) cand.insert({'i', c.s, x.s});
    } else {
      if (x.kind == 'i' && x.s == c.s) cand.insert({'h', x.o, c.o});
      if (x.kind == 'h' && x.o == c.o) cand.insert({'i', c.s, x.s});
    }
    std::set<RefAtom> out;
    for (const auto& h : cand)
      if (ok(h) && forward(x, h).count(c)) out.insert(h);
    return out;
  }
};

// Visible premises closed under both rules, never adding `stop`.
inline std::set<RefAtom> ref_forward_closure(const RefWorld& rw, const std::vector<std::string>& visible,
                                             const std::optional<RefAtom>& stop = std::nullopt) {
  std::set<RefAtom> fwd;
  for (const auto& v : visible)
    if (auto a = rw.parse(v)) fwd.insert(*a);
  for (bool grew = true; grew;) {
    grew = false;
    std::vector<RefAtom> snap(fwd.begin(), fwd.end());
    for (const auto& a : snap)
      for (const auto& b : snap)
        for (const auto& c : rw.forward(a, b))
          if (c != stop && fwd.insert(c).second) grew = true;
  }
  return fwd;
}

// Hypotheses reachable by backward chaining from the goal. Forward side:
// visible premises plus their closure, where the goal is never added.
// Backward side: the goal plus every hypothesis, each abduced from a
// backward statement and a forward statement. Copies of a step input and
// statements already on the backward side are excluded.
inline std::set<std::string> brute_force_hypotheses(const adgv::OracleWorld& world,
                                                    const std::vector<std::string>& visible,
                                                    const std::string& goal_text) {
  RefWorld rw(world);
  auto g = rw.parse(goal_text);
  if (!g) return {};
  auto fwd = ref_forward_closure(rw, visible, g);
  std::set<RefAtom> back{*g};
  std::vector<RefAtom> work{*g};
  std::set<std::string> out;
  while (!work.empty()) {
    RefAtom c = work.back();
    work.pop_back();
    for (const auto& x : fwd)
      for (const auto& h : rw.backward(x, c)) {
        if (h == x || h == c) continue;
        if (back.insert(h).second) {
          work.push_back(h);
          out.insert(RefWorld::render(h));
        }
      }
  }
  return out;
}

}  // namespace testing
