#pragma once

#include <stdexcept>
#include <string>

namespace flexsc {

// Invalid physical or controller parameter.
struct ParameterError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Mismatched vector/matrix sizes or lengths.
struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Factorization or eigen-solver failure.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Data matrices do not carry enough rank for the requested problem.
struct RankError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Iterative solver did not converge or found the problem infeasible.
struct SolverError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed configuration or CSV input.
struct ParseError : std::runtime_error {
  ParseError(const std::string& what, int line = 0)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line(line) {}
  int line;
};

// Data collection produced unusable data (not persistently exciting).
struct CollectionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace flexsc
