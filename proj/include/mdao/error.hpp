#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace mdao {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text (XML, CSV, JSON). Line/column are 1-based, 0 if unknown.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line, int column)
      : Error(what + " (line " + std::to_string(line) + ", column " + std::to_string(column) + ")"),
        line_(line),
        column_(column) {}
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

/// Shape violations: mixed content, leaf/prefix collisions, schema mismatches.
class StructuralError : public Error {
 public:
  using Error::Error;
};

class NotFoundError : public Error {
 public:
  NotFoundError(const std::string& what, std::string nearest_ancestor)
      : Error(what), nearest_ancestor_(std::move(nearest_ancestor)) {}
  const std::string& nearest_ancestor() const { return nearest_ancestor_; }

 private:
  std::string nearest_ancestor_;
};

/// Bad argument values (out-of-domain numbers, invalid specs, unbound steps).
class DomainError : public Error {
 public:
  using Error::Error;
};

}  // namespace mdao
