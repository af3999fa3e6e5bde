#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace mfc {

// Model data violates a structural contract (non-stochastic kernel row,
// mismatched lengths, missing support point in a policy domain).
class ModelError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A numerical precondition failed during a solve, e.g. a Riccati stage
// matrix that should be positive definite is not.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, int stage)
      : std::runtime_error(what), stage_(stage) {}
  int stage() const noexcept { return stage_; }

 private:
  int stage_;
};

// An enumeration would exceed its configured size cap.
class BudgetError : public std::runtime_error {
 public:
  BudgetError(const std::string& what, std::uint64_t required, std::uint64_t budget)
      : std::runtime_error(what), required_(required), budget_(budget) {}
  std::uint64_t required() const noexcept { return required_; }
  std::uint64_t budget() const noexcept { return budget_; }

 private:
  std::uint64_t required_;
  std::uint64_t budget_;
};

}  // namespace mfc
