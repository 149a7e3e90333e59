#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace adgv {

enum class Capability : unsigned {
  deduce = 1u << 0,
  abduce = 1u << 1,
  entail = 1u << 2,
  heuristic_d = 1u << 3,
  heuristic_a = 1u << 4,
};

class Capabilities {
 public:
  constexpr Capabilities() = default;
  constexpr Capabilities(std::initializer_list<Capability> caps) {
    for (auto c : caps) bits_ |= static_cast<unsigned>(c);
  }
  static constexpr Capabilities all() {
    return {Capability::deduce, Capability::abduce, Capability::entail,
            Capability::heuristic_d, Capability::heuristic_a};
  }
  constexpr bool has(Capability c) const {
    return (bits_ & static_cast<unsigned>(c)) != 0;
  }
  constexpr void add(Capability c) { bits_ |= static_cast<unsigned>(c); }

 private:
  unsigned bits_ = 0;
};

std::string_view to_string(Capability c);

enum class Decode { sample, greedy };
enum class HeuristicKind { deductive, abductive };

using TextPair = std::pair<std::string, std::string>;

// The four learned components behind one interface. Implementations report
// failures by throwing BackendError.
//
// Heuristic pairs are (first, second) for deductive scoring and
// (conclusion, premise) for abductive scoring; higher scores are explored
// first.
class StepBackend {
 public:
  virtual ~StepBackend() = default;

  virtual Capabilities capabilities() const = 0;
  virtual std::string identity() const = 0;
  // True if every method may be called concurrently.
  virtual bool thread_safe() const { return false; }

  // At most n conclusions; greedy returns at most one.
  virtual std::vector<std::string> deduce(const std::string& first,
                                          const std::string& second, int n,
                                          Decode mode) const = 0;
  // At most n hypotheses h such that (premise, h) yields conclusion.
  virtual std::vector<std::string> abduce(const std::string& premise,
                                          const std::string& conclusion, int n,
                                          Decode mode) const = 0;
  // Probability in [0,1] that premise entails hypothesis.
  virtual double entail(const std::string& premise,
                        const std::string& hypothesis) const = 0;
  virtual std::vector<double> heuristic(HeuristicKind kind,
                                        const std::optional<std::string>& goal,
                                        std::span<const TextPair> pairs) const = 0;
};

// Per-run memo of greedy generations and entailment probabilities, keyed by
// the normalized request. Sampling calls pass through.
class MemoBackend final : public StepBackend {
 public:
  explicit MemoBackend(const StepBackend& inner) : inner_(inner) {}

  Capabilities capabilities() const override { return inner_.capabilities(); }
  std::string identity() const override { return inner_.identity(); }
  bool thread_safe() const override { return inner_.thread_safe(); }

  std::vector<std::string> deduce(const std::string& first, const std::string& second,
                                  int n, Decode mode) const override;
  std::vector<std::string> abduce(const std::string& premise, const std::string& conclusion,
                                  int n, Decode mode) const override;
  double entail(const std::string& premise, const std::string& hypothesis) const override;
  std::vector<double> heuristic(HeuristicKind kind, const std::optional<std::string>& goal,
                                std::span<const TextPair> pairs) const override {
    return inner_.heuristic(kind, goal, pairs);
  }

  std::size_t hits() const;

 private:
  const StepBackend& inner_;
  mutable std::mutex mu_;
  mutable std::map<std::string, std::vector<std::string>> generations_;
  mutable std::map<std::string, double> entailments_;
  mutable std::size_t hits_ = 0;
};

}  // namespace adgv
