#pragma once

#include <stdexcept>
#include <string>

namespace dstal {

// Base for every error raised by the library. `kind()` is a stable,
// machine-readable tag used by the CLI and the HTTP layer.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
  virtual const char* kind() const noexcept { return "error"; }
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line = 0, std::string dialogue_id = {})
      : Error(what), line_(line), dialogue_id_(std::move(dialogue_id)) {}
  const char* kind() const noexcept override { return "parse_error"; }
  std::size_t line() const noexcept { return line_; }
  const std::string& dialogue_id() const noexcept { return dialogue_id_; }

 private:
  std::size_t line_;
  std::string dialogue_id_;
};

// A value or domain-slot that the ontology does not admit.
class ValidationError : public Error {
 public:
  ValidationError(const std::string& what, std::string slot = {})
      : Error(what), slot_(std::move(slot)) {}
  const char* kind() const noexcept override { return "validation_error"; }
  const std::string& slot() const noexcept { return slot_; }

 private:
  std::string slot_;
};

class RangeError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "range_error"; }
};

class NotFoundError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "not_found"; }
};

class ConflictError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "conflict"; }
};

class OracleError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "oracle_error"; }
};

}  // namespace dstal
