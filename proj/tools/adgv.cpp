#include <algorithm>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "adgv/config.hpp"
#include "adgv/dataset.hpp"
#include "adgv/errors.hpp"
#include "adgv/eval.hpp"
#include "adgv/oracle.hpp"
#include "adgv/scoring.hpp"
#include "adgv/search.hpp"
#include "adgv/text.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace adgv;

namespace {

std::string utc_now() {
  auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

std::string file_hash(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return hex64(fnv1a(buf.str()));
}

// Records inputs and outputs of one command and writes manifest.json.
class Manifest {
 public:
  Manifest(std::string command, fs::path out, std::vector<std::string> argv)
      : out_(std::move(out)) {
    j_["command"] = std::move(command);
    j_["argv"] = std::move(argv);
    j_["started_at"] = utc_now();
    j_["inputs"] = json::array();
    j_["artifacts"] = json::array();
    fs::create_directories(out_);
  }

  void input(const fs::path& path) {
    j_["inputs"].push_back({{"path", path.string()}, {"fnv1a", file_hash(path)}});
  }
  void set(const std::string& key, json value) { j_[key] = std::move(value); }

  fs::path artifact(const std::string& name) {
    j_["artifacts"].push_back(name);
    return out_ / name;
  }

  void write() {
    j_["finished_at"] = utc_now();
    j_["artifacts"].push_back("manifest.json");
    std::ofstream(out_ / "manifest.json") << j_.dump(2) << "\n";
  }

 private:
  fs::path out_;
  json j_;
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

// Step counts as they appear in the source DSL, before binarization.
std::size_t source_steps(const EntailmentTree& t) {
  std::size_t synthetic = 0;
  for (const auto& m : t.intermediates()) synthetic += m.synthetic;
  return t.steps().size() - synthetic;
}

struct RunFlags {
  std::string config_path;
  std::string mode, backend, stratum, direction;
  int k = 0, k_prime = 0, forward_budget = 0, backward_budget = 0, eta = 0, workers = 0;
  double t_d = 0, t_a = 0, t_m = 0;
  std::uint64_t seed = 0;
  bool early_stop = false;
  std::map<std::string, CLI::Option*> opts;

  void attach(CLI::App* app) {
    opts["config"] = app->add_option("--config", config_path, "JSON run config; flags override it");
    opts["mode"] = app->add_option("--mode", mode, "dg, ag, adg or adgv");
    opts["backend"] = app->add_option("--backend", backend, "oracle:<world-file> or remote:<url>");
    opts["k"] = app->add_option("--k", k, "abductive samples per step");
    opts["k_prime"] = app->add_option("--k-prime", k_prime, "deductive samples per step");
    opts["forward_budget"] = app->add_option("--forward-budget", forward_budget,
                                             "fixed forward budget (disables the depth schedule)");
    opts["backward_budget"] = app->add_option("--backward-budget", backward_budget,
                                              "fixed backward budget (disables the depth schedule)");
    opts["t_d"] = app->add_option("--t-d", t_d, "deductive agreement threshold");
    opts["t_a"] = app->add_option("--t-a", t_a, "abductive agreement threshold");
    opts["t_m"] = app->add_option("--t-m", t_m, "recovery threshold");
    opts["eta"] = app->add_option("--eta", eta, "consanguinity depth");
    opts["seed"] = app->add_option("--seed", seed, "run seed");
    opts["workers"] = app->add_option("--workers", workers, "parallel treelets");
    opts["stratum"] = app->add_option("--stratum", stratum, "depth or full");
    opts["entail_direction"] = app->add_option("--entail-direction", direction,
                                               "rightward, leftward or bidirectional");
    opts["early_stop"] = app->add_flag("--early-stop", early_stop, "stop once x_m is recovered");
  }

  RunConfig resolve() const {
    RunConfig c;
    if (!config_path.empty()) c = RunConfig::load(config_path);
    json o = json::object();
    auto given = [&](const char* key) { return opts.at(key)->count() > 0; };
    if (given("mode")) o["mode"] = mode;
    if (given("backend")) o["backend"] = backend;
    if (given("k")) o["k"] = k;
    if (given("k_prime")) o["k_prime"] = k_prime;
    if (given("forward_budget")) o["forward_budget"] = forward_budget;
    if (given("backward_budget")) o["backward_budget"] = backward_budget;
    if (given("forward_budget") || given("backward_budget")) o["budget_schedule"] = false;
    if (given("t_d")) o["t_d"] = t_d;
    if (given("t_a")) o["t_a"] = t_a;
    if (given("t_m")) o["t_m"] = t_m;
    if (given("eta")) o["eta"] = eta;
    if (given("seed")) o["seed"] = seed;
    if (given("workers")) o["workers"] = workers;
    if (given("stratum")) o["stratum"] = stratum;
    if (given("entail_direction")) o["entail_direction"] = direction;
    if (given("early_stop")) o["early_stop"] = early_stop;
    c.merge(o);
    if (c.backend.empty()) throw ConfigError("no backend given (use --backend or the config file)");
    return c;
  }
};

std::vector<std::string> g_argv;

// --- import ----------------------------------------------------------------

int cmd_import(const fs::path& input, const fs::path& out_dir) {
  Manifest m("import", out_dir, g_argv);
  m.input(input);
  std::vector<json> rows;
  std::size_t steps = 0;
  for (const auto& row : read_jsonl(input)) {
    try {
      EntailmentTree t = row.value.contains("proof")
                             ? parse_proof_dsl(dsl_record_from_json(row.value))
                             : tree_from_json(row.value);
      steps += source_steps(t);
      rows.push_back(tree_to_json(t));
    } catch (const Error& e) {
      throw Error(input.string() + " line " + std::to_string(row.line) + ": " + e.what());
    } catch (const json::exception& e) {
      throw Error(input.string() + " line " + std::to_string(row.line) + ": " + e.what());
    }
  }
  if (rows.empty()) throw Error(input.string() + " holds no records");
  write_jsonl(m.artifact("trees.jsonl"), rows);
  double mean = static_cast<double>(steps) / static_cast<double>(rows.size());
  json stats{{"trees", rows.size()}, {"steps", steps}, {"mean_steps", mean}};
  m.set("stats", stats);
  m.write();
  std::cout << "trees " << rows.size() << "  steps " << steps << "  mean steps " << std::fixed
            << std::setprecision(2) << mean << "\n";
  return 0;
}

// --- slice -----------------------------------------------------------------

int cmd_slice(const fs::path& input, const fs::path& out_dir, const std::vector<int>& depths,
              bool full_only, std::optional<std::size_t> sample, std::uint64_t seed) {
  Manifest m("slice", out_dir, g_argv);
  m.input(input);
  std::vector<Treelet> kept;
  std::size_t total = 0;
  for (const auto& tree : read_canonical_trees(input)) {
    for (auto& t : slice_treelets(tree)) {
      ++total;
      if (!depths.empty() && std::find(depths.begin(), depths.end(), t.depth()) == depths.end())
        continue;
      if (full_only && !t.full) continue;
      kept.push_back(std::move(t));
    }
  }
  if (sample) {
    if (*sample > kept.size())
      throw Error("asked for " + std::to_string(*sample) + " treelets but only " +
                  std::to_string(kept.size()) + " match");
    std::vector<std::size_t> idx(kept.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::mt19937_64 rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(*sample);
    std::sort(idx.begin(), idx.end());
    std::vector<Treelet> picked;
    for (auto i : idx) picked.push_back(std::move(kept[i]));
    kept = std::move(picked);
  }
  std::vector<json> rows;
  for (const auto& t : kept) rows.push_back(treelet_to_json(t));
  write_jsonl(m.artifact("treelets.jsonl"), rows);
  m.set("stats", {{"sliced", total}, {"kept", kept.size()}, {"seed", seed}});
  m.write();
  std::cout << "treelets " << kept.size() << " of " << total << "\n";
  return 0;
}

// --- oracle-suite ----------------------------------------------------------

int cmd_oracle_suite(const fs::path& out_dir, const std::vector<int>& depths, std::size_t count,
                     std::uint64_t seed) {
  Manifest m("oracle-suite", out_dir, g_argv);
  OracleWorld world;
  std::vector<json> rows;
  for (int d : depths)
    for (const auto& t : generate_oracle_suite(world, d, count, seed + static_cast<std::uint64_t>(d)))
      rows.push_back(treelet_to_json(t));
  world.save(m.artifact("world.json"));
  write_jsonl(m.artifact("treelets.jsonl"), rows);
  m.set("seed", seed);
  m.write();
  std::cout << "treelets " << rows.size() << "  world " << (out_dir / "world.json").string() << "\n";
  return 0;
}

// --- search ----------------------------------------------------------------

int cmd_search(const fs::path& input, const fs::path& out_dir, const RunFlags& flags) {
  RunConfig cfg = flags.resolve();
  Manifest m("search", out_dir, g_argv);
  m.input(input);
  auto treelets = read_treelets(input);
  auto backend = make_backend(cfg.backend);
  Capabilities caps = backend->capabilities();
  Capabilities need = required_capabilities(cfg.eval.search.mode);
  for (auto c : {Capability::deduce, Capability::abduce, Capability::entail, Capability::heuristic_d,
                 Capability::heuristic_a})
    if (need.has(c) && !caps.has(c))
      throw ConfigError("backend lacks " + std::string(to_string(c)) + " needed by mode " +
                        std::string(to_string(cfg.eval.search.mode)));
  Scorer scorer(*backend, cfg.eval.direction, cfg.eval.t_m);

  std::vector<json> events, hyps, proofs;
  for (const auto& t : treelets) {
    SearchConfig sc = cfg.eval.search;
    if (cfg.eval.use_budget_schedule) {
      int b = scheduled_budget(t.depth(), cfg.eval.stratum == Stratum::full);
      sc.forward_budget = b;
      sc.backward_budget = b;
    }
    auto state = adgv_search(t.visible_premises, t.base.goal(), sc, *backend);
    for (const auto& e : state.log) {
      json j = e.to_json();
      j["treelet_id"] = t.id;
      events.push_back(std::move(j));
    }
    std::vector<ProofTree> assembled;
    for (const auto& y : state.yielded) assembled.push_back(assemble_proof(y, state));
    if (!assembled.empty() && caps.has(Capability::deduce)) assembled = rerank_proofs(std::move(assembled), *backend);
    std::map<std::string, std::string> proof_of;
    for (std::size_t i = 0; i < assembled.size(); ++i) {
      std::string id = t.id + "/p" + std::to_string(i);
      proof_of[assembled[i].recovered.value] = id;
      json j = proof_to_json(assembled[i], id);
      j["treelet_id"] = t.id;
      proofs.push_back(std::move(j));
    }
    std::optional<std::string> best;
    double best_s = -1;
    for (const auto& y : state.yielded) {
      const auto& h = state.statement(y);
      auto s = scorer.score(h.text, t.missing.text);
      hyps.push_back({{"treelet_id", t.id},
                      {"hypothesis", h.text},
                      {"s_r", s.s_r},
                      {"s_e", s.s_e},
                      {"s", s.s},
                      {"recovered", s.recovered},
                      {"proof_id", proof_of.count(y.value) ? json(proof_of[y.value]) : json(nullptr)}});
      if (s.recovered && s.s > best_s) {
        best_s = s.s;
        best = h.text;
      }
    }
    std::cout << t.id << ": " << state.yielded.size() << " hypotheses";
    if (best) std::cout << ", recovered \"" << *best << "\" (E " << best_s << ")";
    std::cout << "\n";
  }
  write_jsonl(m.artifact("events.jsonl"), events);
  write_jsonl(m.artifact("hypotheses.jsonl"), hyps);
  write_jsonl(m.artifact("proofs.jsonl"), proofs);
  m.set("config", cfg.to_json());
  m.set("backend_identity", backend->identity());
  m.set("seed", cfg.eval.seed);
  m.write();
  return 0;
}

// --- eval ------------------------------------------------------------------

int cmd_eval(const fs::path& input, const fs::path& out_dir, const RunFlags& flags) {
  RunConfig cfg = flags.resolve();
  Manifest m("eval", out_dir, g_argv);
  m.input(input);
  auto treelets = read_treelets(input);
  auto backend = make_backend(cfg.backend);
  EvalReport r = run_suite(treelets, cfg.eval, *backend);

  write_text(m.artifact("summary.json"), r.summary_json().dump(2) + "\n");
  write_text(m.artifact("summary.txt"), r.summary_text());
  write_jsonl(m.artifact("detail.jsonl"), r.detail_rows());
  write_jsonl(m.artifact("scores.jsonl"), r.score_rows());
  std::vector<json> proofs, events;
  for (const auto& row : r.rows) {
    for (std::size_t i = 0; i < row.proofs.size(); ++i) {
      json j = proof_to_json(row.proofs[i], row.treelet_id + "/p" + std::to_string(i));
      j["treelet_id"] = row.treelet_id;
      proofs.push_back(std::move(j));
    }
    for (const auto& e : row.log) {
      json j = e.to_json();
      j["treelet_id"] = row.treelet_id;
      events.push_back(std::move(j));
    }
  }
  write_jsonl(m.artifact("proofs.jsonl"), proofs);
  write_jsonl(m.artifact("events.jsonl"), events);
  m.set("config", cfg.to_json());
  m.set("backend_identity", backend->identity());
  m.set("seed", cfg.eval.seed);
  m.write();
  std::cout << r.summary_text();
  if (r.failed > 0) {
    std::cerr << r.failed << " treelet(s) failed; see detail.jsonl\n";
    return 3;
  }
  return 0;
}

// --- score -----------------------------------------------------------------

int cmd_score(const std::string& backend_spec, const std::string& candidate,
              const std::string& reference, const std::string& pairs_file, const fs::path& out_dir,
              double t_m, const std::string& direction) {
  auto backend = make_backend(backend_spec);
  Scorer scorer(*backend, entail_direction_from_string(direction), t_m);
  auto row = [&](const std::string& c, const std::string& ref) {
    auto s = scorer.score(c, ref);
    return json{{"hypothesis", c}, {"reference", ref}, {"s_r", s.s_r},
                {"s_e", s.s_e},    {"s", s.s},         {"recovered", s.recovered}};
  };
  if (pairs_file.empty()) {
    if (candidate.empty() || reference.empty())
      throw ConfigError("give --hypothesis and --reference, or --pairs");
    std::cout << row(candidate, reference).dump() << "\n";
    return 0;
  }
  if (out_dir.empty()) throw ConfigError("--pairs needs --out");
  Manifest m("score", out_dir, g_argv);
  m.input(pairs_file);
  std::vector<json> rows;
  for (const auto& line : read_jsonl(pairs_file)) {
    const auto& v = line.value;
    if (!v.contains("hypothesis") || !v.contains("reference"))
      throw Error(pairs_file + " line " + std::to_string(line.line) + ": need hypothesis and reference");
    rows.push_back(row(v["hypothesis"].get<std::string>(), v["reference"].get<std::string>()));
  }
  write_jsonl(m.artifact("scores.jsonl"), rows);
  m.set("backend_identity", backend->identity());
  m.set("t_m", t_m);
  m.write();
  std::size_t recovered = 0;
  for (const auto& r : rows) recovered += r["recovered"].get<bool>();
  std::cout << "scored " << rows.size() << "  recovered " << recovered << "\n";
  return 0;
}

// --- make-training-data ----------------------------------------------------

int cmd_training(const fs::path& input, const fs::path& out_dir, int negatives, std::uint64_t seed) {
  Manifest m("make-training-data", out_dir, g_argv);
  m.input(input);
  std::vector<json> ded, abd, heur;
  std::size_t copies = 0;
  std::uint64_t k = 0;
  for (const auto& tree : read_canonical_trees(input)) {
    auto d = build_deductive_training_examples(tree);
    copies += deductive_copy_violations(d).size();
    for (const auto& ex : d) ded.push_back(example_to_json(ex));
    for (const auto& ex : build_abductive_training_examples(tree)) abd.push_back(example_to_json(ex));
    for (const auto& ex : build_heuristic_training_pairs(tree, negatives, seed + k++))
      heur.push_back(example_to_json(ex));
  }
  write_jsonl(m.artifact("deductive.jsonl"), ded);
  write_jsonl(m.artifact("abductive.jsonl"), abd);
  write_jsonl(m.artifact("heuristic.jsonl"), heur);
  m.set("stats", {{"deductive", ded.size()},
                  {"abductive", abd.size()},
                  {"heuristic", heur.size()},
                  {"deductive_copies", copies},
                  {"negatives_per_positive", negatives},
                  {"seed", seed}});
  m.write();
  std::cout << "deductive " << ded.size() << "  abductive " << abd.size() << "  heuristic "
            << heur.size() << "\n";
  if (copies > 0) std::cerr << copies << " deductive example(s) copy an input\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  g_argv.assign(argv, argv + argc);
  CLI::App app{"Abductive and deductive step search over entailment trees"};
  app.require_subcommand(1);
  int status = 0;

  std::string input, out;
  auto add_io = [&](CLI::App* sub, const char* what) {
    sub->add_option("input", input, what)->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out, "output directory")->required();
  };

  auto* imp = app.add_subcommand("import", "parse a DSL or canonical corpus into canonical trees");
  add_io(imp, "JSONL corpus");

  auto* sl = app.add_subcommand("slice", "slice canonical trees into treelets");
  add_io(sl, "canonical trees JSONL");
  std::vector<int> depths;
  bool full_only = false;
  std::size_t sample = 0;
  std::uint64_t slice_seed = 0;
  sl->add_option("--depth", depths, "keep only these depths");
  sl->add_flag("--full", full_only, "keep only treelets rooted at the tree goal");
  auto* sample_opt = sl->add_option("--sample", sample, "sample exactly N treelets");
  sl->add_option("--seed", slice_seed, "sampling seed");

  auto* oracle = app.add_subcommand("oracle-suite", "generate an oracle world and treelet suite");
  std::vector<int> oracle_depths{1, 2};
  std::size_t oracle_count = 50;
  std::uint64_t oracle_seed = 0;
  oracle->add_option("--depth", oracle_depths, "treelet depths")->capture_default_str();
  oracle->add_option("--count", oracle_count, "treelets per depth")->capture_default_str();
  oracle->add_option("--seed", oracle_seed, "generator seed")->capture_default_str();
  oracle->add_option("--out", out, "output directory")->required();

  RunFlags search_flags, eval_flags;
  auto* se = app.add_subcommand("search", "run the search on each treelet and write its artifacts");
  add_io(se, "treelets JSONL");
  search_flags.attach(se);

  auto* ev = app.add_subcommand("eval", "evaluate a treelet suite");
  add_io(ev, "treelets JSONL");
  eval_flags.attach(ev);

  auto* sc = app.add_subcommand("score", "score hypotheses against references");
  std::string score_backend, hypothesis, reference, pairs, direction = "rightward";
  double score_t_m = kDefaultRecoveryThreshold;
  sc->add_option("--backend", score_backend, "oracle:<world-file> or remote:<url>")->required();
  sc->add_option("--hypothesis", hypothesis, "generated hypothesis");
  sc->add_option("--reference", reference, "gold premise");
  sc->add_option("--pairs", pairs, "JSONL of {hypothesis, reference}")->check(CLI::ExistingFile);
  sc->add_option("--out", out, "output directory (with --pairs)");
  sc->add_option("--t-m", score_t_m, "recovery threshold")->capture_default_str();
  sc->add_option("--entail-direction", direction, "rightward, leftward or bidirectional");

  auto* tr = app.add_subcommand("make-training-data", "build step-model and heuristic training files");
  add_io(tr, "canonical trees JSONL");
  int negatives = 0;
  std::uint64_t train_seed = 0;
  tr->add_option("--negatives-per-positive", negatives, "heuristic negatives per positive")->required();
  tr->add_option("--seed", train_seed, "negative sampling seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*imp) status = cmd_import(input, out);
    else if (*sl) {
      std::optional<std::size_t> n;
      if (sample_opt->count()) n = sample;
      status = cmd_slice(input, out, depths, full_only, n, slice_seed);
    } else if (*oracle) status = cmd_oracle_suite(out, oracle_depths, oracle_count, oracle_seed);
    else if (*se) status = cmd_search(input, out, search_flags);
    else if (*ev) status = cmd_eval(input, out, eval_flags);
    else if (*sc) status = cmd_score(score_backend, hypothesis, reference, pairs, out, score_t_m, direction);
    else if (*tr) status = cmd_training(input, out, negatives, train_seed);
  } catch (const BackendError& e) {
    std::cerr << "backend error: " << e.what() << "\n";
    if (!e.payload().empty()) std::cerr << "payload: " << e.payload() << "\n";
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return status;
}
