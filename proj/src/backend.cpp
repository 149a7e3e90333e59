#include "adgv/backend.hpp"

#include "adgv/text.hpp"

namespace adgv {

std::string_view to_string(Capability c) {
  switch (c) {
    case Capability::deduce: return "deduce";
    case Capability::abduce: return "abduce";
    case Capability::entail: return "entail";
    case Capability::heuristic_d: return "heuristic_d";
    case Capability::heuristic_a: return "heuristic_a";
  }
  return "?";
}

namespace {

std::string key(std::string_view tag, const std::string& a, const std::string& b, int n) {
  std::string k(tag);
  k += '\x1f';
  k += normalize(a);
  k += '\x1f';
  k += normalize(b);
  k += '\x1f';
  k += std::to_string(n);
  return k;
}

}  // namespace

std::vector<std::string> MemoBackend::deduce(const std::string& first,
                                             const std::string& second, int n,
                                             Decode mode) const {
  if (mode != Decode::greedy) return inner_.deduce(first, second, n, mode);
  auto k = key("d", first, second, n);
  {
    std::lock_guard lock(mu_);
    if (auto it = generations_.find(k); it != generations_.end()) {
      ++hits_;
      return it->second;
    }
  }
  auto out = inner_.deduce(first, second, n, mode);
  std::lock_guard lock(mu_);
  generations_.emplace(k, out);
  return out;
}

std::vector<std::string> MemoBackend::abduce(const std::string& premise,
                                             const std::string& conclusion, int n,
                                             Decode mode) const {
  if (mode != Decode::greedy) return inner_.abduce(premise, conclusion, n, mode);
  auto k = key("a", premise, conclusion, n);
  {
    std::lock_guard lock(mu_);
    if (auto it = generations_.find(k); it != generations_.end()) {
      ++hits_;
      return it->second;
    }
  }
  auto out = inner_.abduce(premise, conclusion, n, mode);
  std::lock_guard lock(mu_);
  generations_.emplace(k, out);
  return out;
}

double MemoBackend::entail(const std::string& premise, const std::string& hypothesis) const {
  auto k = key("e", premise, hypothesis, 0);
  {
    std::lock_guard lock(mu_);
    if (auto it = entailments_.find(k); it != entailments_.end()) {
      ++hits_;
      return it->second;
    }
  }
  double p = inner_.entail(premise, hypothesis);
  std::lock_guard lock(mu_);
  entailments_.emplace(k, p);
  return p;
}

std::size_t MemoBackend::hits() const {
  std::lock_guard lock(mu_);
  return hits_;
}

}  // namespace adgv
