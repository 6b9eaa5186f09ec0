#pragma once

#include <stdexcept>
#include <string>

namespace epialloc {

// Base for every failure raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shapes or dimensions do not line up.
class StructuralError : public Error {
 public:
  using Error::Error;
};

// A value lies outside its admissible domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Linear algebra broke down (non-PD matrix, singular solve).
class NumericalError : public Error {
 public:
  using Error::Error;
};

class IntegrationFailure : public Error {
 public:
  IntegrationFailure(double time, const std::string& what)
      : Error("integration failed at t=" + std::to_string(time) + ": " + what), time_(time) {}

  double time() const noexcept { return time_; }

 private:
  double time_;
};

class OptimizationFailure : public Error {
 public:
  OptimizationFailure(const std::string& what, double best_violation = 0.0)
      : Error(what), best_violation_(best_violation) {}

  double best_violation() const noexcept { return best_violation_; }

 private:
  double best_violation_;
};

// Evaluation of a scenario failed; carries the scenario index.
class ScenarioFailure : public Error {
 public:
  ScenarioFailure(std::size_t scenario, const std::string& what)
      : Error("scenario " + std::to_string(scenario) + ": " + what), scenario_(scenario) {}

  std::size_t scenario() const noexcept { return scenario_; }

 private:
  std::size_t scenario_;
};

}  // namespace epialloc
