#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "epialloc/core/error.hpp"
#include "epialloc/ode/model.hpp"

namespace epialloc::alloc {

/// Daily dose limits over the inclusive vaccination window.
struct BudgetConfig {
  int t_start = 16;
  int t_end = 40;
  double daily_budget = 0.0;      // B_t, identical on every window day
  std::vector<double> daily_cap;  // U_t^k per subpopulation

  std::size_t width() const { return t_end >= t_start ? static_cast<std::size_t>(t_end - t_start + 1) : 0; }

  void validate(std::size_t K, int horizon) const {
    if (t_start < 0 || t_end < t_start) throw DomainError("budget: window must satisfy 0 <= t_start <= t_end");
    if (t_end > horizon) throw DomainError("budget: window ends after the simulation horizon");
    if (!(daily_budget >= 0.0)) throw DomainError("budget: daily budget must be >= 0");
    if (daily_cap.size() != K) throw StructuralError("budget: one daily cap per subpopulation required");
    for (double u : daily_cap)
      if (!(u >= 0.0)) throw DomainError("budget: daily caps must be >= 0");
  }
};

/// Total overshoot of the daily budget, the per-subpopulation caps and the
/// sign constraint; zero exactly when the policy is feasible.
inline double constraint_violation(const VaccinePolicy& v, const BudgetConfig& b) {
  if (v.t_start != b.t_start || v.t_end != b.t_end) throw StructuralError("budget: policy window differs from budget window");
  if (v.K != b.daily_cap.size()) throw StructuralError("budget: policy and budget disagree on K");
  double c = 0.0;
  for (std::size_t j = 0; j < v.width(); ++j) {
    double day = 0.0;
    for (std::size_t k = 0; k < v.K; ++k) {
      const double x = v.at(k, j);
      day += x;
      c += std::max(0.0, x - b.daily_cap[k]) + std::max(0.0, -x);
    }
    c += std::max(0.0, day - b.daily_budget);
  }
  return c;
}

/// Peak target: infections (I) for the SEIR family, hospitalizations (H) for SEPIHR.
struct ObjectiveSpec {
  std::string target = "I";
  int horizon = 120;

  void validate(const ModelSpec& model) const {
    if (!model.state_index(target)) throw DomainError("objective: model has no state '" + target + "'");
    if (horizon <= 0) throw DomainError("objective: horizon must be positive");
  }
};

}  // namespace epialloc::alloc
