#pragma once

#include <stdexcept>
#include <string>

namespace dgm {

// Violated precondition or shape contract on an operation.
class ContractError : public std::logic_error {
 public:
  explicit ContractError(const std::string& what) : std::logic_error(what) {}
};

// Malformed textual input; carries the 1-based line number when known.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  explicit ParseError(const std::string& what) : std::runtime_error(what), line_(0) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Filesystem access failure (open, read, write).
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

// Checkpoint load failures, typed so callers can distinguish rejection causes.
class CheckpointError : public std::runtime_error {
 public:
  enum class Kind { BadMagic, Truncated, BadChecksum, ManifestMismatch, VariantMismatch, Io };

  CheckpointError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

inline void check(bool ok, const char* what) {
  if (!ok) throw ContractError(what);
}

}  // namespace dgm
