#include "adgv/oracle.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <regex>

#include "adgv/errors.hpp"
#include "adgv/text.hpp"

namespace adgv {

using nlohmann::json;

bool OracleWorld::closed() const {
  return !entities.empty() || !classes.empty() || !properties.empty();
}

bool OracleWorld::well_formed(const Atom& atom) const {
  if (atom.subject.empty() || atom.object.empty()) return false;
  if (atom.kind == Atom::Kind::is_a && atom.subject == atom.object) return false;
  if (!closed()) return true;
  bool subject_ok = entities.count(atom.subject) || classes.count(atom.subject);
  bool object_ok = atom.kind == Atom::Kind::is_a ? classes.count(atom.object) > 0
                                                 : properties.count(atom.object) > 0;
  return subject_ok && object_ok;
}

std::string OracleWorld::render(const Atom& atom) {
  if (atom.kind == Atom::Kind::is_a)
    return "a " + atom.subject + " is a kind of " + atom.object;
  return "a " + atom.subject + " has " + atom.object;
}

std::optional<Atom> OracleWorld::parse(std::string_view text) const {
  static const std::regex is_a_re(R"(^a (\S+) is a kind of (\S+)$)");
  static const std::regex has_re(R"(^a (\S+) has (\S+)$)");
  std::string norm = normalize(text);
  std::smatch m;
  std::optional<Atom> atom;
  if (std::regex_match(norm, m, is_a_re))
    atom = is_a(m[1].str(), m[2].str());
  else if (std::regex_match(norm, m, has_re))
    atom = has(m[1].str(), m[2].str());
  if (atom && !well_formed(*atom)) atom.reset();
  return atom;
}

namespace {

void apply_rules(const OracleWorld& world, const Atom& a, const Atom& b,
                 std::vector<Atom>& out) {
  if (a.kind != Atom::Kind::is_a || a.object != b.subject) return;
  Atom c = b.kind == Atom::Kind::is_a ? is_a(a.subject, b.object)
                                      : has(a.subject, b.object);
  if (!world.well_formed(c)) return;
  if (std::find(out.begin(), out.end(), c) == out.end()) out.push_back(std::move(c));
}

}  // namespace

std::vector<Atom> OracleWorld::deduce(const Atom& a, const Atom& b) const {
  std::vector<Atom> out;
  if (!well_formed(a) || !well_formed(b)) return out;
  apply_rules(*this, a, b, out);
  apply_rules(*this, b, a, out);
  return out;
}

std::vector<Atom> OracleWorld::abduce(const Atom& x, const Atom& c) const {
  std::vector<Atom> candidates;
  if (!well_formed(x) || !well_formed(c)) return candidates;
  if (c.kind == Atom::Kind::is_a) {
    if (x.kind == Atom::Kind::is_a) {
      // x first: is_a(A,B), h=is_a(B,C)
      if (x.subject == c.subject) candidates.push_back(is_a(x.object, c.object));
      // x second: h=is_a(A,B), x=is_a(B,C)
      if (x.object == c.object) candidates.push_back(is_a(c.subject, x.subject));
    }
  } else {
    // x first: is_a(A,B), h=has(B,P)
    if (x.kind == Atom::Kind::is_a && x.subject == c.subject)
      candidates.push_back(has(x.object, c.object));
    // x second: h=is_a(A,B), x=has(B,P)
    if (x.kind == Atom::Kind::has && x.object == c.object)
      candidates.push_back(is_a(c.subject, x.subject));
  }
  std::vector<Atom> out;
  for (auto& h : candidates) {
    if (!well_formed(h)) continue;
    auto derived = deduce(x, h);
    if (std::find(derived.begin(), derived.end(), c) == derived.end()) continue;
    if (std::find(out.begin(), out.end(), h) == out.end()) out.push_back(std::move(h));
  }
  return out;
}

std::set<Atom> OracleWorld::closure(std::set<Atom> atoms) const {
  for (bool grew = true; grew;) {
    grew = false;
    std::vector<Atom> snapshot(atoms.begin(), atoms.end());
    for (const auto& a : snapshot)
      for (const auto& b : snapshot)
        for (auto& c : deduce(a, b))
          if (atoms.insert(std::move(c)).second) grew = true;
  }
  return atoms;
}

OracleWorld OracleWorld::from_json(const json& j) {
  OracleWorld w;
  auto symbols = [&](const char* key, std::set<std::string>& out) {
    if (j.contains(key))
      for (const auto& s : j.at(key)) out.insert(normalize(s.get<std::string>()));
  };
  symbols("entities", w.entities);
  symbols("classes", w.classes);
  symbols("properties", w.properties);
  if (j.contains("facts")) {
    for (const auto& f : j.at("facts")) {
      auto text = f.get<std::string>();
      auto atom = w.parse(text);
      if (!atom) throw Error("oracle world fact does not parse: " + text);
      w.facts.insert(*atom);
    }
  }
  return w;
}

json OracleWorld::to_json() const {
  json facts_j = json::array();
  for (const auto& f : facts) facts_j.push_back(render(f));
  return json{{"entities", entities},
              {"classes", classes},
              {"properties", properties},
              {"facts", std::move(facts_j)}};
}

OracleWorld OracleWorld::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open oracle world " + path.string());
  try {
    return from_json(json::parse(in));
  } catch (const json::exception& e) {
    throw Error("bad oracle world " + path.string() + ": " + e.what());
  }
}

void OracleWorld::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << to_json().dump(2) << "\n";
}

// --- backend ---------------------------------------------------------------

std::vector<std::string> oracle_deduce(const OracleWorld& world, const std::string& s1,
                                       const std::string& s2, int n) {
  std::vector<std::string> out;
  auto a = world.parse(s1), b = world.parse(s2);
  if (!a || !b) return out;
  for (const auto& c : world.deduce(*a, *b)) {
    if (static_cast<int>(out.size()) >= n) break;
    out.push_back(OracleWorld::render(c));
  }
  return out;
}

std::vector<std::string> oracle_abduce(const OracleWorld& world, const std::string& x,
                                       const std::string& c, int n) {
  std::vector<std::string> out;
  auto xa = world.parse(x), ca = world.parse(c);
  if (!xa || !ca) return out;
  for (const auto& h : world.abduce(*xa, *ca)) {
    if (static_cast<int>(out.size()) >= n) break;
    out.push_back(OracleWorld::render(h));
  }
  return out;
}

double oracle_entail(const OracleWorld& world, const std::string& a, const std::string& b) {
  if (normalize(a) == normalize(b)) return 1.0;
  auto aa = world.parse(a), bb = world.parse(b);
  if (!aa || !bb) return 0.0;
  std::set<Atom> start = world.facts;
  start.insert(*aa);
  return world.closure(std::move(start)).count(*bb) ? 1.0 : 0.0;
}

std::string OracleBackend::identity() const {
  return "oracle:" + hex64(fnv1a(world_.to_json().dump()));
}

std::vector<std::string> OracleBackend::deduce(const std::string& first,
                                               const std::string& second, int n,
                                               Decode mode) const {
  return oracle_deduce(world_, first, second, mode == Decode::greedy ? std::min(n, 1) : n);
}

std::vector<std::string> OracleBackend::abduce(const std::string& premise,
                                               const std::string& conclusion, int n,
                                               Decode mode) const {
  return oracle_abduce(world_, premise, conclusion,
                       mode == Decode::greedy ? std::min(n, 1) : n);
}

double OracleBackend::entail(const std::string& premise, const std::string& hypothesis) const {
  return oracle_entail(world_, premise, hypothesis);
}

std::vector<double> OracleBackend::heuristic(HeuristicKind kind,
                                             const std::optional<std::string>& goal,
                                             std::span<const TextPair> pairs) const {
  std::vector<double> scores;
  scores.reserve(pairs.size());
  std::string g = goal ? normalize(*goal) : std::string();
  for (const auto& [first, second] : pairs) {
    double score = 0.0;
    if (kind == HeuristicKind::deductive) {
      if (!oracle_deduce(world_, first, second, 1).empty()) score = 1.0;
    } else if (!oracle_abduce(world_, second, first, 1).empty()) {
      score = 1.0;
      if (goal && normalize(first) != g) score += 0.5;
    }
    scores.push_back(score);
  }
  return scores;
}

// --- suite generation ------------------------------------------------------

namespace {

const std::vector<std::string>& noun_pool() {
  static const std::vector<std::string> pool = {
      "sparrow", "robin", "bird", "animal", "organism", "mammal", "dog", "cat",
      "wolf", "canine", "feline", "lion", "tiger", "predator", "reptile", "lizard",
      "snake", "vertebrate", "fish", "salmon", "trout", "eagle", "hawk", "raptor",
      "oak", "tree", "plant", "fern", "moss", "flower", "rose", "tulip",
      "horse", "equine", "zebra", "whale", "dolphin", "cetacean", "frog", "amphibian",
      "toad", "insect", "ant", "bee", "beetle", "arthropod", "spider", "arachnid",
      "crab", "crustacean", "shark", "ray", "owl", "penguin", "seabird", "gull",
      "bat", "rodent", "mouse", "rat"};
  return pool;
}

const std::vector<std::string>& property_pool() {
  static const std::vector<std::string> pool = {
      "fur", "feathers", "scales", "wings", "roots", "leaves", "gills", "lungs",
      "claws", "teeth", "warm-blood", "cold-blood", "a-backbone", "six-legs",
      "eight-legs", "a-shell", "fins", "a-beak", "a-tail", "whiskers"};
  return pool;
}

class TreeBuilder {
 public:
  TreeBuilder(OracleWorld& world, std::mt19937_64& rng) : world_(world), rng_(rng) {
    nouns_ = noun_pool();
    std::shuffle(nouns_.begin(), nouns_.end(), rng_);
  }

  std::string fresh_noun() {
    std::string s = next_ < nouns_.size() ? nouns_[next_]
                                          : nouns_[next_ % nouns_.size()] + std::to_string(next_);
    ++next_;
    world_.classes.insert(s);
    return s;
  }

  std::string property() {
    const auto& pool = property_pool();
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    std::string p = pool[pick(rng_)];
    world_.properties.insert(p);
    return p;
  }

  // Returns the id of the statement for `atom` after expanding it to
  // exactly `depth` levels.
  StatementId expand(const Atom& atom, int depth, bool is_goal) {
    std::string text = OracleWorld::render(atom);
    if (depth == 0) {
      premises.push_back(Statement::make(text, Role::premise, Origin::dataset));
      return premises.back().id;
    }
    std::string middle = fresh_noun();
    Atom left = is_a(atom.subject, middle);
    Atom right = atom.kind == Atom::Kind::is_a ? is_a(middle, atom.object)
                                               : has(middle, atom.object);
    std::uniform_int_distribution<int> coin(0, 1);
    std::uniform_int_distribution<int> shallow(0, depth - 1);
    bool deep_left = coin(rng_) == 1;
    int dl = deep_left ? depth - 1 : shallow(rng_);
    int dr = deep_left ? shallow(rng_) : depth - 1;
    StatementId l = expand(left, dl, false);
    StatementId r = expand(right, dr, false);
    Statement out = is_goal ? Statement::make(text, Role::goal, Origin::dataset)
                            : Statement::make(text, Role::intermediate, Origin::deductive_step);
    StatementId id = out.id;
    if (is_goal)
      goal = std::move(out);
    else
      mids.push_back(std::move(out));
    steps.push_back({Direction::deductive, {l, r}, id, std::nullopt});
    return id;
  }

  std::vector<Statement> premises;
  std::vector<Statement> mids;
  std::vector<StepRecord> steps;
  Statement goal;

 private:
  OracleWorld& world_;
  std::mt19937_64& rng_;
  std::vector<std::string> nouns_;
  std::size_t next_ = 0;
};

}  // namespace

std::vector<EntailmentTree> generate_oracle_trees(OracleWorld& world, int depth,
                                                  std::size_t count, std::uint64_t seed) {
  if (depth < 1) throw Error("oracle tree depth must be at least 1");
  std::mt19937_64 rng(seed);
  std::vector<EntailmentTree> out;
  for (std::size_t i = 0; i < count; ++i) {
    TreeBuilder b(world, rng);
    std::uniform_int_distribution<int> coin(0, 1);
    std::string subject = b.fresh_noun();
    Atom goal = coin(rng) ? has(subject, b.property()) : is_a(subject, b.fresh_noun());
    b.expand(goal, depth, true);
    out.push_back(EntailmentTree::build(
        "oracle-d" + std::to_string(depth) + "-" + std::to_string(seed) + "-" + std::to_string(i),
        std::move(b.premises), std::move(b.mids), std::move(b.steps), std::move(b.goal)));
  }
  return out;
}

std::vector<Treelet> generate_oracle_suite(OracleWorld& world, int depth,
                                           std::size_t count, std::uint64_t seed) {
  std::vector<Treelet> out;
  std::uint64_t batch = 0;
  while (out.size() < count) {
    if (batch > 1000) throw Error("could not generate enough oracle treelets");
    for (const auto& tree : generate_oracle_trees(world, depth, 16, seed * 7919 + batch)) {
      for (auto& t : slice_treelets(tree)) {
        if (t.depth() != depth || out.size() >= count) continue;
        std::set<Atom> visible;
        for (const auto& v : t.visible_premises) visible.insert(*world.parse(v.text));
        if (world.closure(visible).count(*world.parse(t.missing.text))) continue;
        out.push_back(std::move(t));
      }
    }
    ++batch;
  }
  return out;
}

}  // namespace adgv
