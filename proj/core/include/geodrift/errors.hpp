#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace geodrift {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Degenerate or ill-defined geometry: branch ambiguity in log maps,
// rank-deficient point sets, points behind the camera.
class GeometryError : public Error {
 public:
  using Error::Error;
};

class SolverError : public Error {
 public:
  using Error::Error;
};

// Inconsistent scene or pipeline data (missing ids, ordering violations).
class DataError : public Error {
 public:
  using Error::Error;
};

class ParseError : public DataError {
 public:
  ParseError(const std::string& source, std::size_t line, std::size_t column,
             const std::string& what)
      : DataError(source + ":" + std::to_string(line) + ":" +
                  std::to_string(column) + ": " + what),
        line_(line),
        column_(column) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

}  // namespace geodrift
