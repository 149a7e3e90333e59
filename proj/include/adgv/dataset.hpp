#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "adgv/tree.hpp"

namespace adgv {

// One record in the upstream EntailmentBank-style layout.
struct ProofDslRecord {
  std::string id;
  std::string hypothesis;
  std::vector<std::pair<std::string, std::string>> sentences;  // sentN -> text
  std::string proof;  // "sent1 & sent2 -> int1: ...; int1 & sent3 -> hypothesis"
};

// Parses the proof DSL into a validated tree. Steps with more than two
// inputs are binarized left to right through synthetic intermediates.
// Throws ParseError (with byte offset into `proof`) or StructuralError.
EntailmentTree parse_proof_dsl(const ProofDslRecord& record);

// Accepts "sentences" as an object, or falls back to "meta.triples" or a
// flat "context" string of the form "sent1: ... sent2: ...".
ProofDslRecord dsl_record_from_json(const nlohmann::json& j);

nlohmann::json tree_to_json(const EntailmentTree& tree);
EntailmentTree tree_from_json(const nlohmann::json& j);

nlohmann::json statement_to_json(const Statement& s);

nlohmann::json treelet_to_json(const Treelet& t);
Treelet treelet_from_json(const nlohmann::json& j);

// Line-delimited records. Blank lines are skipped; a malformed line throws
// ParseError whose message names the 1-based line number.
struct JsonLine {
  std::size_t line = 0;
  nlohmann::json value;
};
std::vector<JsonLine> read_jsonl(const std::filesystem::path& path);
void write_jsonl(const std::filesystem::path& path,
                 const std::vector<nlohmann::json>& records);

std::vector<EntailmentTree> read_canonical_trees(const std::filesystem::path& path);
std::vector<Treelet> read_treelets(const std::filesystem::path& path);

enum class ExampleKind {
  deductive_step,
  abductive_step,
  heuristic_positive,
  heuristic_negative
};

std::string_view to_string(ExampleKind kind);

struct TrainingExample {
  ExampleKind kind;
  std::vector<std::string> inputs;
  std::string target;  // generated text, or "1"/"0" for heuristic pairs
};

nlohmann::json example_to_json(const TrainingExample& ex);

// Two per step, one per ablated input; the conclusion is always the last
// input.
std::vector<TrainingExample> build_abductive_training_examples(
    const EntailmentTree& tree);

std::vector<TrainingExample> build_deductive_training_examples(
    const EntailmentTree& tree);

// Indices of deductive examples whose target copies an input.
std::vector<std::size_t> deductive_copy_violations(
    std::span<const TrainingExample> examples);

// Positives pair each step input with that step's conclusion. Negatives
// pair a conclusion with a premise or intermediate outside its subtree,
// sampled without replacement.
std::vector<TrainingExample> build_heuristic_training_pairs(
    const EntailmentTree& tree, int negatives_per_positive, std::uint64_t seed);

}  // namespace adgv
