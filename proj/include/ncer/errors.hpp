#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ncer {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed arguments or inputs violating a precondition.
class InputError : public Error {
 public:
  using Error::Error;
};

/// The observable is almost surely constant (zero variance).
class DegenerateError : public InputError {
 public:
  using InputError::InputError;
};

/// An integer or table capacity was exceeded.
class CapacityError : public Error {
 public:
  using Error::Error;
};

/// Exact enumeration would exceed the configured work budget.
class BudgetExceeded : public CapacityError {
 public:
  BudgetExceeded(std::size_t cost, std::size_t budget)
      : CapacityError("exact enumeration needs " + std::to_string(cost) +
                      " table lookups, budget is " + std::to_string(budget) +
                      "; use the Monte Carlo estimator instead"),
        cost_(cost),
        budget_(budget) {}

  std::size_t cost() const { return cost_; }
  std::size_t budget() const { return budget_; }

 private:
  std::size_t cost_;
  std::size_t budget_;
};

/// The requested tolerance cannot be certified within the budget.
class ToleranceError : public Error {
 public:
  ToleranceError(const std::string& what, double achievable)
      : Error(what), achievable_(achievable) {}

  double achievable_tol() const { return achievable_; }

 private:
  double achievable_;
};

}  // namespace ncer
