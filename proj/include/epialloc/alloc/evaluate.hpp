#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <utility>
#include <vector>

#include "epialloc/alloc/budget.hpp"
#include "epialloc/core/error.hpp"
#include "epialloc/core/parallel.hpp"
#include "epialloc/ode/integrate.hpp"
#include "epialloc/scenario/set.hpp"

namespace epialloc::alloc {

struct EvaluationResult {
  double objective = 0.0;    // sum_w p_w * peak_w
  std::vector<double> peaks;  // per scenario, in set order
  double violation = 0.0;
};

/// Scores vaccine policies by their expected peak over a scenario set.
/// Every scenario is compiled once; simulations of distinct scenarios and
/// policies run in parallel and are reduced in a fixed order.
class PolicyEvaluator {
 public:
  PolicyEvaluator(ModelSpec model, PopulationConfig pop, StateVector x0, scenario::ScenarioSet set,
                  ObjectiveSpec objective, BudgetConfig budgets, std::size_t workers = default_workers(),
                  IntegratorOptions integrator = {})
      : model_(std::move(model)), pop_(std::move(pop)), x0_(std::move(x0)), set_(std::move(set)),
        objective_(std::move(objective)), budgets_(std::move(budgets)), workers_(std::max<std::size_t>(1, workers)),
        integrator_(integrator) {
    model_.validate();
    pop_.validate();
    objective_.validate(model_);
    budgets_.validate(pop_.K(), objective_.horizon);
    set_.validate(model_.param_bounds);
    if (x0_.size() != model_.n_states() * pop_.K()) throw StructuralError("evaluator: initial state dimension mismatch");
    grid_ = day_grid(objective_.horizon);
    target_ = *model_.state_index(objective_.target);
    for (const auto& s : set_.scenarios) {
      PopulationConfig p = pop_;
      if (!s.c2.empty()) {
        if (s.c2.size() != pop_.K()) throw StructuralError("evaluator: scenario c2 must have one entry per subpopulation");
        p.onset_c2 = s.c2;
      }
      compiled_.push_back(epialloc::detail::compile(model_, p, s.theta));
    }
    epialloc::detail::check_conservation(compiled_.front(), x0_);
    prepare();
  }

  PolicyEvaluator(const PolicyEvaluator&) = delete;
  PolicyEvaluator& operator=(const PolicyEvaluator&) = delete;
  PolicyEvaluator(PolicyEvaluator&&) = default;

  std::size_t size() const { return set_.size(); }
  std::size_t workers() const { return workers_; }
  void set_workers(std::size_t w) { workers_ = std::max<std::size_t>(1, w); }
  const scenario::ScenarioSet& scenarios() const { return set_; }
  const BudgetConfig& budgets() const { return budgets_; }
  const ObjectiveSpec& objective() const { return objective_; }
  const ModelSpec& model() const { return model_; }
  const PopulationConfig& population() const { return pop_; }
  const StateVector& initial_state() const { return x0_; }
  const std::vector<double>& grid() const { return grid_; }

  /// Peak over the daily grid of the target state summed across subpopulations.
  /// Days before the window do not depend on the policy, so each scenario
  /// restarts from its cached state at t_start.
  double peak(const VaccinePolicy& v, std::size_t scenario) const {
    const auto& m = compiled_[scenario];
    double best = prefix_peak_[scenario];
    try {
      epialloc::detail::integrate_rk4(
          m, prefix_state_[scenario], suffix_grid_, &v, integrator_.step,
          [&](std::size_t, std::span<const double> x) { best = std::max(best, target_total(m, x)); },
          &tables_[scenario]);
    } catch (const IntegrationFailure& e) {
      throw ScenarioFailure(scenario, e.what());
    }
    return best;
  }

  EvaluationResult evaluate(const VaccinePolicy& v) const { return std::move(evaluate_batch({v}).front()); }

  std::vector<EvaluationResult> evaluate_batch(const std::vector<VaccinePolicy>& batch) const {
    const std::size_t S = set_.size();
    std::vector<double> peaks(batch.size() * S);
    parallel_for(peaks.size(), workers_, [&](std::size_t i) { peaks[i] = peak(batch[i / S], i % S); });
    std::vector<EvaluationResult> out(batch.size());
    for (std::size_t b = 0; b < batch.size(); ++b) {
      auto& r = out[b];
      r.peaks.assign(peaks.begin() + static_cast<std::ptrdiff_t>(b * S),
                     peaks.begin() + static_cast<std::ptrdiff_t>((b + 1) * S));
      for (std::size_t s = 0; s < S; ++s) r.objective += set_.scenarios[s].p * r.peaks[s];
      r.violation = constraint_violation(batch[b], budgets_);
    }
    return out;
  }

  Trajectory trajectory(const VaccinePolicy& v, std::size_t scenario) const {
    const auto& m = compiled_[scenario];
    Trajectory traj;
    traj.dim = x0_.size();
    traj.times = grid_;
    traj.values.resize(grid_.size() * traj.dim);
    try {
      epialloc::detail::integrate_rk4(m, x0_, grid_, &v, integrator_.step, [&](std::size_t i, std::span<const double> x) {
        std::copy(x.begin(), x.end(), traj.values.begin() + static_cast<std::ptrdiff_t>(i * traj.dim));
      });
    } catch (const IntegrationFailure& e) {
      throw ScenarioFailure(scenario, e.what());
    }
    return traj;
  }

  /// Probability-weighted mean trajectory over the scenario set.
  Trajectory expected_trajectory(const VaccinePolicy& v) const {
    std::vector<Trajectory> all(set_.size());
    parallel_for(all.size(), workers_, [&](std::size_t s) { all[s] = trajectory(v, s); });
    Trajectory mean;
    mean.dim = x0_.size();
    mean.times = grid_;
    mean.values.assign(grid_.size() * mean.dim, 0.0);
    for (std::size_t s = 0; s < all.size(); ++s)
      for (std::size_t i = 0; i < mean.values.size(); ++i) mean.values[i] += set_.scenarios[s].p * all[s].values[i];
    return mean;
  }

 private:
  double target_total(const epialloc::detail::CompiledModel& m, std::span<const double> x) const {
    double total = 0.0;
    for (std::size_t k = 0; k < m.K; ++k) total += x[k * m.nc + target_];
    return total;
  }

  void prepare() {
    const auto split = static_cast<std::size_t>(budgets_.t_start);
    const std::span<const double> prefix(grid_.data(), split + 1);
    suffix_grid_.assign(grid_.begin() + static_cast<std::ptrdiff_t>(split), grid_.end());
    const auto none = VaccinePolicy::zero(pop_.K(), budgets_.t_start, budgets_.t_end);
    for (std::size_t s = 0; s < compiled_.size(); ++s) {
      const auto& m = compiled_[s];
      double best = 0.0;
      std::vector<double> state;
      try {
        epialloc::detail::integrate_rk4(m, x0_, prefix, &none, integrator_.step,
                                        [&](std::size_t i, std::span<const double> x) {
                                          best = std::max(best, target_total(m, x));
                                          if (i == split) state.assign(x.begin(), x.end());
                                        });
      } catch (const IntegrationFailure& e) {
        throw ScenarioFailure(s, e.what());
      }
      prefix_peak_.push_back(best);
      prefix_state_.push_back(std::move(state));
      epialloc::detail::OnsetTable table;
      if (m.vaccinated)
        for (std::size_t k = 0; k < m.K; ++k) {
          auto& series = onset_[{m.c1[k], m.c2[k]}];
          if (series.empty()) series = epialloc::detail::onset_series(m.c1[k], m.c2[k], suffix_grid_, integrator_.step);
          table.series.push_back(series.data());
        }
      tables_.push_back(std::move(table));
    }
  }

  ModelSpec model_;
  PopulationConfig pop_;
  StateVector x0_;
  scenario::ScenarioSet set_;
  ObjectiveSpec objective_;
  BudgetConfig budgets_;
  std::size_t workers_;
  IntegratorOptions integrator_;
  std::vector<double> grid_;
  std::size_t target_ = 0;
  std::vector<epialloc::detail::CompiledModel> compiled_;
  std::vector<double> suffix_grid_;
  std::vector<double> prefix_peak_;
  std::vector<std::vector<double>> prefix_state_;
  std::map<std::pair<double, double>, std::vector<double>> onset_;
  std::vector<epialloc::detail::OnsetTable> tables_;
};

}  // namespace epialloc::alloc
