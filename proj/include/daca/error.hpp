#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace daca {

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Malformed or out-of-range input data. Carries the 1-based record number when
// the failure is tied to one row of a stream (0 otherwise).
class InputError : public Error {
public:
  explicit InputError(const std::string& what, std::uint64_t row = 0)
      : Error(row == 0 ? what : "row " + std::to_string(row) + ": " + what), row_(row) {}

  std::uint64_t row() const noexcept { return row_; }

private:
  std::uint64_t row_;
};

class ValidationError : public Error {
public:
  using Error::Error;
};

// Exhaustive enumeration would exceed the configured candidate cap.
class CapacityError : public Error {
public:
  CapacityError(const std::string& what, std::uint64_t count)
      : Error(what + " (" + std::to_string(count) + " candidates)"), count_(count) {}

  std::uint64_t count() const noexcept { return count_; }

private:
  std::uint64_t count_;
};

class DegenerateError : public Error {
public:
  using Error::Error;
};

}  // namespace daca
