#include "adgv/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <regex>
#include <unordered_map>
#include <unordered_set>

#include "adgv/errors.hpp"
#include "adgv/text.hpp"

namespace adgv {

using nlohmann::json;

namespace {

struct Span {
  std::string_view text;
  std::size_t offset = 0;
};

Span trim(std::string_view s, std::size_t offset) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return {s.substr(b, e - b), offset + b};
}

bool is_key(std::string_view s, std::string_view prefix) {
  if (s.size() <= prefix.size() || s.substr(0, prefix.size()) != prefix)
    return false;
  return std::all_of(s.begin() + static_cast<std::ptrdiff_t>(prefix.size()),
                     s.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
}

struct Segment {
  std::size_t offset = 0;
  std::vector<Span> inputs;
  std::string out_key;
  std::string out_text;
};

constexpr std::string_view kHypothesis = "hypothesis";

Segment parse_segment(Span seg) {
  Segment out;
  out.offset = seg.offset;
  auto arrow = seg.text.find("->");
  if (arrow == std::string_view::npos)
    throw ParseError(seg.offset, "step is missing '->'");

  std::string_view lhs = seg.text.substr(0, arrow);
  std::size_t start = 0;
  while (true) {
    auto amp = lhs.find('&', start);
    auto piece = lhs.substr(start, amp == std::string_view::npos ? lhs.size() - start
                                                                 : amp - start);
    Span key = trim(piece, seg.offset + start);
    if (key.text.empty()) throw ParseError(key.offset, "empty step input");
    out.inputs.push_back(key);
    if (amp == std::string_view::npos) break;
    start = amp + 1;
  }

  Span rhs = trim(seg.text.substr(arrow + 2), seg.offset + arrow + 2);
  if (rhs.text.empty()) throw ParseError(rhs.offset, "step has no output");
  if (rhs.text == kHypothesis ||
      (rhs.text.substr(0, kHypothesis.size()) == kHypothesis &&
       rhs.text.size() > kHypothesis.size() && rhs.text[kHypothesis.size()] == ':')) {
    out.out_key = std::string(kHypothesis);
    return out;
  }
  auto colon = rhs.text.find(':');
  Span key = trim(rhs.text.substr(0, colon), rhs.offset);
  if (!is_key(key.text, "int"))
    throw ParseError(key.offset, "step output must be 'hypothesis' or 'intN: text'");
  if (colon == std::string_view::npos)
    throw ParseError(rhs.offset + rhs.text.size(), "intermediate has no text");
  Span text = trim(rhs.text.substr(colon + 1), rhs.offset + colon + 1);
  if (text.text.empty()) throw ParseError(text.offset, "intermediate has no text");
  out.out_key = std::string(key.text);
  out.out_text = std::string(text.text);
  return out;
}

std::string strip_terminal(std::string_view text) {
  std::string s(text);
  while (!s.empty() && (std::ispunct(static_cast<unsigned char>(s.back())) ||
                        std::isspace(static_cast<unsigned char>(s.back()))))
    s.pop_back();
  return s;
}

}  // namespace

EntailmentTree parse_proof_dsl(const ProofDslRecord& record) {
  std::vector<Segment> segments;
  {
    std::string_view proof = record.proof;
    std::size_t pos = 0;
    while (pos <= proof.size()) {
      auto end = proof.find(';', pos);
      if (end == std::string_view::npos) end = proof.size();
      Span seg = trim(proof.substr(pos, end - pos), pos);
      if (!seg.text.empty()) segments.push_back(parse_segment(seg));
      pos = end + 1;
    }
  }
  if (segments.empty()) throw ParseError(0, "empty proof");

  std::map<std::string, std::size_t> defined;  // output key -> segment
  for (std::size_t i = 0; i < segments.size(); ++i) {
    if (!defined.emplace(segments[i].out_key, i).second)
      throw ParseError(segments[i].offset,
                       "'" + segments[i].out_key + "' is defined twice");
  }

  std::unordered_map<std::string, std::string> sentence_text(
      record.sentences.begin(), record.sentences.end());
  std::unordered_set<std::string> consumed;
  for (const auto& seg : segments) {
    if (seg.inputs.size() < 2)
      throw ParseError(seg.offset, "step needs at least two inputs");
    for (const auto& in : seg.inputs) {
      std::string key(in.text);
      if (key == kHypothesis)
        throw ParseError(in.offset, "cyclic reference to the hypothesis");
      if (is_key(key, "sent")) {
        if (!sentence_text.count(key))
          throw ParseError(in.offset, "undefined sentence '" + key + "'");
      } else if (is_key(key, "int")) {
        if (!defined.count(key))
          throw ParseError(in.offset, "undefined intermediate '" + key + "'");
      } else {
        throw ParseError(in.offset, "unrecognized key '" + key + "'");
      }
      consumed.insert(key);
    }
  }

  // Cycle check over intermediate references.
  {
    std::map<std::string, int> state;  // 1 = on stack, 2 = done
    std::function<void(const std::string&)> visit = [&](const std::string& key) {
      auto& st = state[key];
      const Segment& seg = segments[defined.at(key)];
      if (st == 2) return;
      if (st == 1) throw ParseError(seg.offset, "cyclic reference through '" + key + "'");
      st = 1;
      for (const auto& in : seg.inputs)
        if (is_key(in.text, "int")) visit(std::string(in.text));
      st = 2;
    };
    for (const auto& [key, idx] : defined) visit(key);
  }

  std::string goal_key;
  if (defined.count(std::string(kHypothesis))) {
    goal_key = std::string(kHypothesis);
  } else {
    std::vector<std::string> roots;
    for (const auto& [key, idx] : defined)
      if (!consumed.count(key)) roots.push_back(key);
    if (roots.size() != 1)
      throw ParseError(segments.back().offset,
                       "proof must end in exactly one conclusion");
    goal_key = roots.front();
  }
  for (const auto& [key, idx] : defined)
    if (key != goal_key && !consumed.count(key))
      throw ParseError(segments[idx].offset, "'" + key + "' is never used");

  std::string goal_text = goal_key == kHypothesis ? record.hypothesis
                                                  : segments[defined.at(goal_key)].out_text;
  if (normalize(goal_text).empty())
    throw ParseError(segments[defined.at(goal_key)].offset, "goal text is empty");
  Statement goal = Statement::make(goal_text, Role::goal, Origin::dataset);

  // Premises in sentence order; identical texts under different keys merge.
  std::unordered_map<std::string, StatementId> key_to_id;
  std::vector<Statement> premises;
  for (const auto& [key, text] : record.sentences) {
    if (!consumed.count(key)) continue;
    Statement s = Statement::make(text, Role::premise, Origin::dataset);
    auto dup = std::find_if(premises.begin(), premises.end(),
                            [&](const Statement& p) { return p.id == s.id; });
    key_to_id[key] = s.id;
    if (dup == premises.end()) premises.push_back(std::move(s));
  }

  std::vector<Statement> mids;
  for (const auto& seg : segments) {
    if (seg.out_key == goal_key) {
      key_to_id[seg.out_key] = goal.id;
      continue;
    }
    Statement m = Statement::make(seg.out_text, Role::intermediate, Origin::deductive_step);
    key_to_id[seg.out_key] = m.id;
    mids.push_back(std::move(m));
  }

  auto text_of = [&](const StatementId& id) -> std::string {
    for (const auto& p : premises)
      if (p.id == id) return p.text;
    for (const auto& m : mids)
      if (m.id == id) return m.text;
    return {};
  };

  std::vector<StepRecord> steps;
  for (const auto& seg : segments) {
    std::vector<StatementId> ins;
    for (const auto& in : seg.inputs) ins.push_back(key_to_id.at(std::string(in.text)));
    StatementId acc = ins[0];
    for (std::size_t i = 1; i + 1 < ins.size(); ++i) {
      Statement synth = Statement::make(
          strip_terminal(text_of(acc)) + " and " + strip_terminal(text_of(ins[i])),
          Role::intermediate, Origin::deductive_step);
      synth.synthetic = true;
      steps.push_back({Direction::deductive, {acc, ins[i]}, synth.id, std::nullopt});
      acc = synth.id;
      mids.push_back(std::move(synth));
    }
    steps.push_back({Direction::deductive, {acc, ins.back()},
                     key_to_id.at(seg.out_key), std::nullopt});
  }

  return EntailmentTree::build(record.id, std::move(premises), std::move(mids),
                               std::move(steps), std::move(goal));
}

ProofDslRecord dsl_record_from_json(const json& j) {
  ProofDslRecord r;
  r.id = j.value("id", std::string{});
  r.hypothesis = j.value("hypothesis", std::string{});
  r.proof = j.value("proof", std::string{});

  auto take_map = [&](const json& m) {
    std::vector<std::pair<int, std::pair<std::string, std::string>>> rows;
    for (auto it = m.begin(); it != m.end(); ++it) {
      const std::string& key = it.key();
      int n = is_key(key, "sent") ? std::stoi(key.substr(4)) : 1 << 30;
      rows.push_back({n, {key, it.value().get<std::string>()}});
    }
    std::stable_sort(rows.begin(), rows.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    for (auto& row : rows) r.sentences.push_back(std::move(row.second));
  };

  if (j.contains("sentences") && j["sentences"].is_object()) {
    take_map(j["sentences"]);
  } else if (j.contains("meta") && j["meta"].contains("triples")) {
    take_map(j["meta"]["triples"]);
  } else if (j.contains("context")) {
    static const std::regex marker(R"((sent\d+)\s*:)");
    std::string ctx = j["context"].get<std::string>();
    std::vector<std::pair<std::string, std::size_t>> marks;
    for (auto it = std::sregex_iterator(ctx.begin(), ctx.end(), marker);
         it != std::sregex_iterator(); ++it)
      marks.push_back({(*it)[1].str(), static_cast<std::size_t>(it->position())});
    for (std::size_t i = 0; i < marks.size(); ++i) {
      auto begin = ctx.find(':', marks[i].second) + 1;
      auto end = i + 1 < marks.size() ? marks[i + 1].second : ctx.size();
      r.sentences.push_back(
          {marks[i].first, std::string(trim(std::string_view(ctx).substr(begin, end - begin), 0).text)});
    }
  }
  return r;
}

// --- canonical format ------------------------------------------------------

json statement_to_json(const Statement& s) {
  return json{{"id", s.id.value}, {"text", s.text}};
}

json tree_to_json(const EntailmentTree& tree) {
  json premises = json::array();
  for (const auto& p : tree.premises()) premises.push_back(statement_to_json(p));
  json steps = json::array();
  for (const auto& st : tree.steps()) {
    const Statement& out = tree.statement(st.output);
    json row{{"inputs", {st.inputs[0].value, st.inputs[1].value}},
             {"output", statement_to_json(out)}};
    if (out.synthetic) row["synthetic"] = true;
    steps.push_back(std::move(row));
  }
  return json{{"id", tree.id()},
              {"goal", tree.goal().text},
              {"premises", std::move(premises)},
              {"steps", std::move(steps)}};
}

EntailmentTree tree_from_json(const json& j) {
  std::string id = j.at("id").get<std::string>();
  Statement goal = Statement::make(j.at("goal").get<std::string>(), Role::goal,
                                   Origin::dataset);
  std::unordered_map<std::string, StatementId> file_ids;
  std::vector<Statement> premises;
  for (const auto& p : j.at("premises")) {
    Statement s = Statement::make(p.at("text").get<std::string>(), Role::premise,
                                  Origin::dataset);
    file_ids[p.at("id").get<std::string>()] = s.id;
    premises.push_back(std::move(s));
  }
  std::vector<Statement> mids;
  std::vector<std::pair<std::array<std::string, 2>, StatementId>> raw_steps;
  for (const auto& st : j.at("steps")) {
    const auto& out = st.at("output");
    std::string text = out.at("text").get<std::string>();
    StatementId out_id;
    if (normalize(text) == goal.normalized) {
      out_id = goal.id;
    } else {
      Statement m = Statement::make(text, Role::intermediate, Origin::deductive_step);
      m.synthetic = st.value("synthetic", false);
      out_id = m.id;
      mids.push_back(std::move(m));
    }
    file_ids[out.at("id").get<std::string>()] = out_id;
    const auto& ins = st.at("inputs");
    if (!ins.is_array() || ins.size() != 2)
      throw StructuralError(out_id.value, "step must have exactly two inputs");
    raw_steps.push_back({{ins[0].get<std::string>(), ins[1].get<std::string>()}, out_id});
  }
  std::vector<StepRecord> steps;
  for (const auto& [ins, out] : raw_steps) {
    StepRecord st{Direction::deductive, {}, out, std::nullopt};
    for (std::size_t k = 0; k < 2; ++k) {
      auto it = file_ids.find(ins[k]);
      if (it == file_ids.end()) throw StructuralError(ins[k], "step input is not declared");
      st.inputs[k] = it->second;
    }
    steps.push_back(std::move(st));
  }
  return EntailmentTree::build(std::move(id), std::move(premises), std::move(mids),
                               std::move(steps), std::move(goal));
}

json treelet_to_json(const Treelet& t) {
  json visible = json::array();
  for (const auto& v : t.visible_premises) visible.push_back(statement_to_json(v));
  return json{{"id", t.id},
              {"tree_id", t.tree_id},
              {"depth", t.depth()},
              {"full", t.full},
              {"deductive_capable", t.deductive_capable},
              {"ablated_index", t.ablated_index},
              {"goal", statement_to_json(t.base.goal())},
              {"missing", statement_to_json(t.missing)},
              {"visible", std::move(visible)},
              {"base", tree_to_json(t.base)}};
}

Treelet treelet_from_json(const json& j) {
  EntailmentTree base = tree_from_json(j.at("base"));
  auto idx = j.at("ablated_index").get<std::size_t>();
  if (idx >= base.premises().size())
    throw StructuralError(j.value("id", std::string{}), "ablated index out of range");
  Treelet t{.id = j.at("id").get<std::string>(),
            .tree_id = j.value("tree_id", std::string{}),
            .base = base,
            .ablated_index = idx,
            .missing = base.premises()[idx],
            .visible_premises = {},
            .full = j.value("full", false),
            .deductive_capable = false};
  for (std::size_t k = 0; k < base.premises().size(); ++k)
    if (k != idx) t.visible_premises.push_back(base.premises()[k]);
  t.deductive_capable = t.visible_premises.size() >= 2;
  return t;
}

std::vector<JsonLine> read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<JsonLine> out;
  std::string line;
  std::size_t n = 0, offset = 0;
  while (std::getline(in, line)) {
    ++n;
    std::size_t here = offset;
    offset += line.size() + 1;
    if (trim(line, 0).text.empty()) continue;
    try {
      out.push_back({n, json::parse(line)});
    } catch (const json::parse_error& e) {
      throw ParseError(here + e.byte, path.string() + ": line " + std::to_string(n) +
                                          ": " + e.what());
    }
  }
  return out;
}

void write_jsonl(const std::filesystem::path& path, const std::vector<json>& records) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  for (const auto& r : records) out << r.dump() << "\n";
}

std::vector<EntailmentTree> read_canonical_trees(const std::filesystem::path& path) {
  std::vector<EntailmentTree> out;
  for (const auto& row : read_jsonl(path)) {
    try {
      out.push_back(tree_from_json(row.value));
    } catch (const std::exception& e) {
      throw Error(path.string() + ": line " + std::to_string(row.line) + ": " + e.what());
    }
  }
  return out;
}

std::vector<Treelet> read_treelets(const std::filesystem::path& path) {
  std::vector<Treelet> out;
  for (const auto& row : read_jsonl(path)) {
    try {
      out.push_back(treelet_from_json(row.value));
    } catch (const std::exception& e) {
      throw Error(path.string() + ": line " + std::to_string(row.line) + ": " + e.what());
    }
  }
  return out;
}

// --- training data ---------------------------------------------------------

std::string_view to_string(ExampleKind kind) {
  switch (kind) {
    case ExampleKind::deductive_step: return "deductive-step";
    case ExampleKind::abductive_step: return "abductive-step";
    case ExampleKind::heuristic_positive: return "heuristic-positive";
    case ExampleKind::heuristic_negative: return "heuristic-negative";
  }
  return "?";
}

json example_to_json(const TrainingExample& ex) {
  json row{{"kind", to_string(ex.kind)}, {"inputs", ex.inputs}};
  if (ex.kind == ExampleKind::heuristic_positive || ex.kind == ExampleKind::heuristic_negative)
    row["target"] = ex.target == "1" ? 1 : 0;
  else
    row["target"] = ex.target;
  return row;
}

std::vector<TrainingExample> build_abductive_training_examples(const EntailmentTree& tree) {
  std::vector<TrainingExample> out;
  for (const auto& st : tree.steps()) {
    const auto& x1 = tree.statement(st.inputs[0]).text;
    const auto& x2 = tree.statement(st.inputs[1]).text;
    const auto& c = tree.statement(st.output).text;
    out.push_back({ExampleKind::abductive_step, {x1, c}, x2});
    out.push_back({ExampleKind::abductive_step, {x2, c}, x1});
  }
  return out;
}

std::vector<TrainingExample> build_deductive_training_examples(const EntailmentTree& tree) {
  std::vector<TrainingExample> out;
  for (const auto& st : tree.steps())
    out.push_back({ExampleKind::deductive_step,
                   {tree.statement(st.inputs[0]).text, tree.statement(st.inputs[1]).text},
                   tree.statement(st.output).text});
  return out;
}

std::vector<std::size_t> deductive_copy_violations(std::span<const TrainingExample> examples) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    auto target = normalize(examples[i].target);
    for (const auto& in : examples[i].inputs)
      if (normalize(in) == target) {
        out.push_back(i);
        break;
      }
  }
  return out;
}

std::vector<TrainingExample> build_heuristic_training_pairs(const EntailmentTree& tree,
                                                            int negatives_per_positive,
                                                            std::uint64_t seed) {
  if (negatives_per_positive < 0) throw ConfigError("negatives per positive must be >= 0");
  std::mt19937_64 rng(seed);
  std::vector<TrainingExample> positives, negatives;

  std::vector<const Statement*> pool;
  for (const auto& p : tree.premises()) pool.push_back(&p);
  for (const auto& m : tree.intermediates()) pool.push_back(&m);

  for (const auto& st : tree.steps()) {
    const Statement& c = tree.statement(st.output);
    for (const auto& in : st.inputs)
      positives.push_back({ExampleKind::heuristic_positive, {tree.statement(in).text, c.text}, "1"});

    std::unordered_set<StatementId> subtree{c.id};
    for (auto i : tree.subtree_steps(c.id))
      for (const auto& in : tree.steps()[i].inputs) subtree.insert(in);
    std::vector<const Statement*> outside;
    for (const auto* s : pool)
      if (!subtree.count(s->id)) outside.push_back(s);

    auto want = static_cast<std::size_t>(negatives_per_positive) * st.inputs.size();
    std::shuffle(outside.begin(), outside.end(), rng);
    outside.resize(std::min(want, outside.size()));
    for (const auto* s : outside)
      negatives.push_back({ExampleKind::heuristic_negative, {s->text, c.text}, "0"});
  }
  positives.insert(positives.end(), std::make_move_iterator(negatives.begin()),
                   std::make_move_iterator(negatives.end()));
  return positives;
}

}  // namespace adgv
