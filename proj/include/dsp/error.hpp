#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dsp {

/// Argument outside the support or parameter space of a distribution or routine.
class DomainError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

/// Caller broke a documented precondition (sizes, finiteness, ordering).
class PreconditionError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Banded Cholesky hit a non-positive pivot.
class NotPositiveDefinite : public std::runtime_error {
public:
  NotPositiveDefinite(std::size_t index, double pivot)
      : std::runtime_error("matrix is not positive definite: pivot " +
                           std::to_string(pivot) + " at index " + std::to_string(index)),
        index_(index), pivot_(pivot) {}

  std::size_t index() const noexcept { return index_; }
  double pivot() const noexcept { return pivot_; }

private:
  std::size_t index_;
  double pivot_;
};

/// Unrecoverable failure inside a Gibbs sweep (e.g. jitter escalation exhausted).
class SamplerError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace dsp
