#pragma once

#include <stdexcept>
#include <string>

namespace ctxem {

// Observation outside the support of a family (e.g. x <= 0 for Maxwell-Boltzmann).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Covariance matrix that is not symmetric positive definite.
class SingularCovariance : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class FamilyMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class UnsupportedFamily : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Bracketed root finding could not establish a sign change.
class NoRoot : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A component received (numerically) zero total responsibility in the M-step.
class DegenerateComponent : public std::runtime_error {
 public:
  DegenerateComponent(int component, const std::string& what)
      : std::runtime_error(what), component_(component) {}
  int component() const noexcept { return component_; }

 private:
  int component_;
};

// Failure inside the EM loop, tagged with the iteration at which it happened.
class FitError : public std::runtime_error {
 public:
  FitError(int iteration, const std::string& what)
      : std::runtime_error(what), iteration_(iteration) {}
  int iteration() const noexcept { return iteration_; }

 private:
  int iteration_;
};

}  // namespace ctxem
