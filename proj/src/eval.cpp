#include "adgv/eval.hpp"

#include <exception>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <thread>
#include <unordered_set>

#include "adgv/errors.hpp"

namespace adgv {

using nlohmann::json;

int scheduled_budget(int depth, bool full_stratum) {
  if (full_stratum) return 25;
  switch (depth) {
    case 1: return 2;
    case 2: return 4;
    case 3: return 8;
    case 4: return 16;
    default: return 25;
  }
}

std::string stratum_key(const Treelet& t, Stratum stratum) {
  if (stratum == Stratum::full) return "full";
  return std::to_string(t.depth());
}

double premise_recall(const ProofTree& proof, std::span<const Statement> visible) {
  if (visible.empty()) return 0.0;
  auto leaves = proof.leaves();
  std::unordered_set<StatementId> leaf_set(leaves.begin(), leaves.end());
  std::size_t used = 0;
  for (const auto& v : visible)
    if (leaf_set.count(v.id)) ++used;
  return static_cast<double>(used) / static_cast<double>(visible.size());
}

json proof_to_json(const ProofTree& proof, const std::string& proof_id) {
  json steps = json::array();
  for (std::size_t i = 0; i < proof.steps.size(); ++i) {
    const auto& st = proof.steps[i];
    json row{{"inputs", {proof.statement(st.inputs[0]).text, proof.statement(st.inputs[1]).text}},
             {"output", proof.statement(st.output).text}};
    if (i < proof.step_flags.size() && !proof.step_flags[i].empty()) row["flag"] = proof.step_flags[i];
    steps.push_back(std::move(row));
  }
  json j{{"proof_id", proof_id},
         {"goal", proof.root.text},
         {"recovered", proof.statement(proof.recovered).text},
         {"length", proof.length()},
         {"steps", std::move(steps)}};
  if (proof.rerank_score) j["rerank_score"] = *proof.rerank_score;
  return j;
}

namespace {

TreeletResult run_one(const Treelet& t, const EvalConfig& config, const StepBackend& backend) {
  TreeletResult r;
  r.treelet_id = t.id;
  r.depth = t.depth();
  r.full = t.full;

  SearchConfig sc = config.search;
  if (config.use_budget_schedule) {
    int b = scheduled_budget(t.depth(), config.stratum == Stratum::full);
    sc.forward_budget = b;
    sc.backward_budget = b;
  }
  r.forward_budget = sc.forward_budget;
  r.backward_budget = sc.backward_budget;

  Scorer scorer(backend, config.direction, config.t_m);
  YieldCallback on_yield;
  if (config.early_stop) {
    on_yield = [&](const Statement& h) {
      try {
        return !scorer.score(h.text, t.missing.text).recovered;
      } catch (const BackendError&) {
        return true;
      }
    };
  }

  SearchState state = adgv_search(t.visible_premises, t.base.goal(), sc, backend, on_yield);
  r.steps_taken_d = state.steps_taken_d;
  r.steps_taken_a = state.steps_taken_a;
  r.log = state.log;
  bool all_failed = !state.log.empty();
  for (const auto& ev : state.log) all_failed = all_failed && !ev.error.empty();
  if (all_failed) {
    r.failed = true;
    r.error = "every backend call failed: " + state.log.front().error;
    return r;
  }

  std::vector<ProofTree> proofs;
  std::vector<std::pair<std::size_t, StatementId>> proof_rows;  // row index, hypothesis
  try {
    for (const auto& hid : state.yielded) {
      const Statement& h = state.statement(hid);
      HypothesisRow row{h.text, scorer.score(h.text, t.missing.text), {}, std::nullopt};
      if (row.score.recovered) {
        row.proof_id = t.id + "/p" + std::to_string(proofs.size());
        proofs.push_back(assemble_proof(hid, state));
        proof_rows.emplace_back(r.hypotheses.size(), hid);
      }
      r.hypotheses.push_back(std::move(row));
    }
    if (!proofs.empty()) r.proofs = rerank_proofs(std::move(proofs), backend);
  } catch (const BackendError& e) {
    r.failed = true;
    r.error = e.what();
    return r;
  }
  for (const auto& [row, hid] : proof_rows)
    for (const auto& p : r.proofs)
      if (p.recovered == hid) r.hypotheses[row].rerank_score = p.rerank_score;
  r.covered = !r.proofs.empty();
  if (r.covered) r.top_p_recall = premise_recall(r.proofs.front(), t.visible_premises);
  return r;
}

}  // namespace

EvalReport run_suite(std::span<const Treelet> treelets, const EvalConfig& config,
                     const StepBackend& backend) {
  if (treelets.empty()) throw Error("evaluation suite is empty");
  config.search.validate();
  auto need = required_capabilities(config.search.mode);
  need.add(Capability::entail);
  auto have = backend.capabilities();
  for (auto c : {Capability::deduce, Capability::abduce, Capability::entail})
    if (need.has(c) && !have.has(c))
      throw ConfigError("backend " + backend.identity() + " lacks capability " +
                        std::string(to_string(c)) + " needed to evaluate mode " +
                        std::string(to_string(config.search.mode)));

  std::vector<std::optional<TreeletResult>> results(treelets.size());
  std::exception_ptr first_error;
  std::mutex mu;
  std::size_t next = 0;
  auto worker = [&] {
    while (true) {
      std::size_t i;
      {
        std::lock_guard lock(mu);
        if (next >= treelets.size() || first_error) return;
        i = next++;
      }
      try {
        results[i] = run_one(treelets[i], config, backend);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  int workers = std::max(1, config.workers);
  if (workers == 1 || !backend.thread_safe()) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  EvalReport report;
  report.mode = config.search.mode;
  report.seed = config.seed;
  report.t_m = config.t_m;
  std::map<std::string, std::size_t> covered;
  std::size_t total_covered = 0, covered_with_recall = 0;
  double count_sum = 0, len_sum = 0, score_sum = 0, recall_sum = 0;
  for (std::size_t i = 0; i < treelets.size(); ++i) {
    TreeletResult& r = *results[i];
    auto key = stratum_key(treelets[i], config.stratum);
    ++report.counts[key];
    covered[key] += r.covered ? 1 : 0;
    if (r.failed) ++report.failed;
    if (r.covered) {
      ++total_covered;
      count_sum += static_cast<double>(r.proofs.size());
      for (const auto& p : r.proofs) {
        len_sum += static_cast<double>(p.length());
        score_sum += p.rerank_score.value_or(0.0);
        ++report.tree.proofs;
      }
      if (r.top_p_recall) {
        recall_sum += *r.top_p_recall;
        ++covered_with_recall;
      }
    }
    report.rows.push_back(std::move(r));
  }
  for (const auto& [key, n] : report.counts)
    report.coverage[key] = static_cast<double>(covered[key]) / static_cast<double>(n);
  report.overall_coverage = static_cast<double>(total_covered) / static_cast<double>(treelets.size());
  if (total_covered > 0) report.tree.count = count_sum / static_cast<double>(total_covered);
  if (report.tree.proofs > 0) {
    report.tree.len = len_sum / static_cast<double>(report.tree.proofs);
    report.tree.score = score_sum / static_cast<double>(report.tree.proofs);
  }
  if (covered_with_recall > 0) report.tree.p_recall = recall_sum / static_cast<double>(covered_with_recall);
  return report;
}

json EvalReport::summary_json() const {
  return json{{"mode", to_string(mode)},
              {"seed", seed},
              {"t_m", t_m},
              {"treelets", rows.size()},
              {"failed", failed},
              {"coverage", coverage},
              {"counts", counts},
              {"overall_coverage", overall_coverage},
              {"tree_metrics",
               {{"count", tree.count},
                {"len", tree.len},
                {"score", tree.score},
                {"p_recall", tree.p_recall},
                {"proofs", tree.proofs}}}};
}

std::string EvalReport::summary_text() const {
  std::ostringstream os;
  os << std::fixed << std::setprecision(1);
  os << "mode " << to_string(mode) << "  seed " << seed << "  t_m " << t_m << "  treelets "
     << rows.size() << "  failed " << failed << "\n\n";
  os << std::left << std::setw(10) << "stratum" << std::setw(8) << "n" << "coverage\n";
  for (const auto& [key, frac] : coverage) {
    std::string label = key == "full" ? "Full" : "D" + key;
    os << std::setw(10) << label << std::setw(8) << counts.at(key) << frac * 100.0 << "%\n";
  }
  os << std::setw(10) << "all" << std::setw(8) << rows.size() << overall_coverage * 100.0 << "%\n\n";
  os << std::setprecision(2);
  os << std::setw(10) << "count" << std::setw(10) << "len" << std::setw(10) << "score"
     << "p_recall\n";
  os << std::setw(10) << tree.count << std::setw(10) << tree.len << std::setw(10)
     << tree.score * 100.0 << tree.p_recall * 100.0 << "\n";
  return os.str();
}

std::vector<json> EvalReport::detail_rows() const {
  std::vector<json> out;
  for (const auto& r : rows) {
    json j{{"treelet_id", r.treelet_id},
           {"depth", r.depth},
           {"full", r.full},
           {"forward_budget", r.forward_budget},
           {"backward_budget", r.backward_budget},
           {"steps_taken_d", r.steps_taken_d},
           {"steps_taken_a", r.steps_taken_a},
           {"yielded", r.hypotheses.size()},
           {"proofs", r.proofs.size()},
           {"covered", r.covered},
           {"failed", r.failed}};
    if (!r.error.empty()) j["error"] = r.error;
    if (r.top_p_recall) j["top_p_recall"] = *r.top_p_recall;
    out.push_back(std::move(j));
  }
  return out;
}

std::vector<json> EvalReport::score_rows() const {
  std::vector<json> out;
  for (const auto& r : rows) {
    for (const auto& h : r.hypotheses) {
      json j{{"treelet_id", r.treelet_id},
             {"hypothesis", h.text},
             {"s_r", h.score.s_r},
             {"s_e", h.score.s_e},
             {"s", h.score.s},
             {"recovered", h.score.recovered},
             {"proof_id", h.proof_id.empty() ? json(nullptr) : json(h.proof_id)},
             {"rerank_score", h.rerank_score ? json(*h.rerank_score) : json(nullptr)}};
      out.push_back(std::move(j));
    }
  }
  return out;
}

}  // namespace adgv
