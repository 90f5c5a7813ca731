#pragma once

#include <stdexcept>
#include <string>

namespace frontier {

// Input problems: bad files, schema mismatches, invalid specs. Maps to exit code 2.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A variable or option in a ModelSpec that cannot be honored.
class SpecError : public DataError {
 public:
  using DataError::DataError;
};

// Exact or numerical linear dependence among design columns.
class CollinearityError : public DataError {
 public:
  CollinearityError(const std::string& what, std::string column)
      : DataError(what), column_(std::move(column)) {}
  const std::string& column() const noexcept { return column_; }

 private:
  std::string column_;
};

// Dimension mismatch or call outside an operation's preconditions.
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// An internal invariant failed after computation. Maps to exit code 4.
class InvariantError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace frontier
