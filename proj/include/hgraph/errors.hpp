#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace hgraph {

// Base for every error raised by the library. Callers that only need a
// message can catch this; the CLI maps subclasses onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input text (edge lists, assignments, config files).
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Unknown hierarchy id, node id or label.
class NotFound : public Error {
 public:
  using Error::Error;
};

// SNC asked for two hierarchy nodes whose coverages overlap.
class NestedSuperNodes : public Error {
 public:
  using Error::Error;
};

// Persisted data that does not match what the reader expects
// (version, checksum, missing or corrupt leaf file).
class StorageError : public Error {
 public:
  using Error::Error;
};

// An assignment that does not describe a valid hierarchy for a graph.
class AssignmentError : public Error {
 public:
  using Error::Error;
};

// A label shared by several nodes where one node was expected.
class AmbiguousLabel : public Error {
 public:
  AmbiguousLabel(const std::string& label, std::vector<std::uint32_t> candidates);
  const std::vector<std::uint32_t>& candidates() const noexcept { return candidates_; }

 private:
  std::vector<std::uint32_t> candidates_;
};

}  // namespace hgraph
