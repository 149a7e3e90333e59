#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "adgv/backend.hpp"
#include "adgv/tree.hpp"

namespace adgv {

// is_a(subject, object) or has(subject, property).
struct Atom {
  enum class Kind { is_a, has };
  Kind kind = Kind::is_a;
  std::string subject;
  std::string object;

  auto operator<=>(const Atom&) const = default;
};

inline Atom is_a(std::string a, std::string b) {
  return {Atom::Kind::is_a, std::move(a), std::move(b)};
}
inline Atom has(std::string a, std::string p) {
  return {Atom::Kind::has, std::move(a), std::move(p)};
}

// A finite symbolic world with two inference rules:
//   R1  is_a(A,B), is_a(B,C) => is_a(A,C)
//   R2  is_a(A,B), has(B,P)  => has(A,P)
// Reflexive is_a atoms are not well formed, so no rule concludes one.
//
// When any symbol set is non-empty the world is closed: atoms must use
// declared symbols (is_a subjects from entities or classes, objects from
// classes; has objects from properties).
class OracleWorld {
 public:
  std::set<std::string> entities;
  std::set<std::string> classes;
  std::set<std::string> properties;
  std::set<Atom> facts;

  bool closed() const;
  bool well_formed(const Atom& atom) const;

  static std::string render(const Atom& atom);
  // Inverse of render on normalized text. Returns nullopt for text that is
  // not a well-formed atom of this world.
  std::optional<Atom> parse(std::string_view text) const;

  // Conclusions of both argument orders, distinct, first order first.
  std::vector<Atom> deduce(const Atom& a, const Atom& b) const;
  // Every h with c in deduce(x, h).
  std::vector<Atom> abduce(const Atom& x, const Atom& c) const;
  std::set<Atom> closure(std::set<Atom> atoms) const;

  static OracleWorld from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  static OracleWorld load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;
};

// Deterministic stand-in for the learned step models. Thread safe.
//
// Heuristics score a pair 1 when the corresponding rule application yields
// something and 0 otherwise. Abductive pairs whose conclusion is not the
// goal get another 0.5, so fresh hypotheses are expanded before the
// remaining goal pairs.
class OracleBackend final : public StepBackend {
 public:
  explicit OracleBackend(OracleWorld world) : world_(std::move(world)) {}

  const OracleWorld& world() const noexcept { return world_; }

  Capabilities capabilities() const override { return Capabilities::all(); }
  std::string identity() const override;
  bool thread_safe() const override { return true; }

  std::vector<std::string> deduce(const std::string& first, const std::string& second,
                                  int n, Decode mode) const override;
  std::vector<std::string> abduce(const std::string& premise, const std::string& conclusion,
                                  int n, Decode mode) const override;
  double entail(const std::string& premise, const std::string& hypothesis) const override;
  std::vector<double> heuristic(HeuristicKind kind, const std::optional<std::string>& goal,
                                std::span<const TextPair> pairs) const override;

 private:
  OracleWorld world_;
};

std::vector<std::string> oracle_deduce(const OracleWorld& world, const std::string& s1,
                                       const std::string& s2, int n);
std::vector<std::string> oracle_abduce(const OracleWorld& world, const std::string& x,
                                       const std::string& c, int n);
double oracle_entail(const OracleWorld& world, const std::string& a, const std::string& b);

// Random trees of exactly `depth` steps along the longest chain, built by
// splitting atoms with fresh symbols. Symbols are added to `world.classes`
// and `world.properties`.
std::vector<EntailmentTree> generate_oracle_trees(OracleWorld& world, int depth,
                                                  std::size_t count, std::uint64_t seed);

// Treelets of the given depth whose missing premise is not in the forward
// closure of the visible premises. Generates trees until `count` treelets
// exist; throws Error if that takes unreasonably many trees.
std::vector<Treelet> generate_oracle_suite(OracleWorld& world, int depth,
                                           std::size_t count, std::uint64_t seed);

}  // namespace adgv
