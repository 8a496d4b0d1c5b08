#pragma once

#include <stdexcept>
#include <string>

namespace cardkit {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Ill-sorted construction or substitution.
class SortError : public Error {
 public:
  using Error::Error;
};

// Concrete evaluation failure (out-of-bounds array index, unbound name, ...).
class EvalError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& msg, int line, int column)
      : Error(std::to_string(line) + ":" + std::to_string(column) + ": " + msg),
        line_(line),
        column_(column) {}

  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

// Operation terms that do not fit their declared type.
class TypeError : public Error {
 public:
  using Error::Error;
};

// An operation replay whose schedule does not fit the term, or whose step
// premise fails.
class ScheduleError : public Error {
 public:
  using Error::Error;
};

class SolverError : public Error {
 public:
  using Error::Error;
};

}  // namespace cardkit
