#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace adgv {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NotFoundError : public Error {
 public:
  using Error::Error;
};

// Malformed entailment tree; node() names the offending statement.
class StructuralError : public Error {
 public:
  StructuralError(std::string node, const std::string& what)
      : Error(what + " (node " + node + ")"), node_(std::move(node)) {}
  const std::string& node() const noexcept { return node_; }

 private:
  std::string node_;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t offset, const std::string& what)
      : Error(what + " at byte " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

// A proof chain could not be reconstructed from search state.
class IntegrityError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Raised by step backends. payload() carries the raw response body or
// transport diagnostic, if any.
class BackendError : public Error {
 public:
  BackendError(const std::string& what, std::string payload = {})
      : Error(what), payload_(std::move(payload)) {}
  const std::string& payload() const noexcept { return payload_; }

 private:
  std::string payload_;
};

}  // namespace adgv
