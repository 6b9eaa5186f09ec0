#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "epialloc/alloc/evaluate.hpp"
#include "epialloc/core/error.hpp"

namespace epialloc::alloc {

struct GaConfig {
  std::size_t population = 100;
  std::size_t generations = 200;
  double p_crossover = 0.9;
  double p_mutation = 0.5;  // per gene
  double eta_c = 10.0;
  double eta_m = 10.0;
  std::uint64_t seed = 1;

  void validate() const {
    if (population == 0 || population % 2 != 0) throw DomainError("ga: population must be even and positive");
    if (!(p_crossover >= 0.0 && p_crossover <= 1.0) || !(p_mutation >= 0.0 && p_mutation <= 1.0))
      throw DomainError("ga: probabilities must lie in [0,1]");
    if (!(eta_c > 0.0) || !(eta_m > 0.0)) throw DomainError("ga: distribution indices must be positive");
  }
};

struct Individual {
  std::vector<double> genes;
  double objective = 0.0;
  double violation = 0.0;
};

/// Constrained domination: feasible beats infeasible, lower violation beats
/// higher among infeasibles, lower objective beats higher among feasibles.
inline bool better(const Individual& a, const Individual& b) {
  const bool fa = a.violation <= 0.0, fb = b.violation <= 0.0;
  if (fa != fb) return fa;
  if (!fa) return a.violation < b.violation;
  return a.objective < b.objective;
}

struct TraceRow {
  std::size_t generation = 0;
  double best_feasible_objective = std::numeric_limits<double>::quiet_NaN();
  double best_violation = 0.0;
  double mean_objective = 0.0;
};

struct GaResult {
  VaccinePolicy policy;
  EvaluationResult evaluation;
  std::vector<TraceRow> trace;
};

namespace detail {

/// Bounded simulated binary crossover, applied gene-wise with probability 1/2.
template <typename Rng>
void sbx(std::vector<double>& a, std::vector<double>& b, const std::vector<double>& hi, double eta, Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (unif(rng) > 0.5) continue;
    if (std::abs(a[i] - b[i]) <= 1e-14) continue;
    const double lo = 0.0, up = hi[i];
    const double y1 = std::min(a[i], b[i]), y2 = std::max(a[i], b[i]);
    const double r = unif(rng);
    auto spread = [&](double beta) {
      const double alpha = 2.0 - std::pow(beta, -(eta + 1.0));
      return r <= 1.0 / alpha ? std::pow(r * alpha, 1.0 / (eta + 1.0))
                              : std::pow(1.0 / (2.0 - r * alpha), 1.0 / (eta + 1.0));
    };
    const double bq1 = spread(1.0 + 2.0 * (y1 - lo) / (y2 - y1));
    const double bq2 = spread(1.0 + 2.0 * (up - y2) / (y2 - y1));
    double c1 = 0.5 * ((y1 + y2) - bq1 * (y2 - y1));
    double c2 = 0.5 * ((y1 + y2) + bq2 * (y2 - y1));
    c1 = std::clamp(c1, lo, up);
    c2 = std::clamp(c2, lo, up);
    if (unif(rng) <= 0.5) std::swap(c1, c2);
    a[i] = c1;
    b[i] = c2;
  }
}

/// Bounded polynomial mutation, each gene with probability p.
template <typename Rng>
void polynomial_mutation(std::vector<double>& x, const std::vector<double>& hi, double p, double eta, Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (unif(rng) > p) continue;
    const double lo = 0.0, up = hi[i];
    if (!(up > lo)) {
      x[i] = lo;
      continue;
    }
    const double d1 = (x[i] - lo) / (up - lo), d2 = (up - x[i]) / (up - lo);
    const double r = unif(rng);
    const double pw = 1.0 / (eta + 1.0);
    double dq;
    if (r < 0.5) {
      const double v = 2.0 * r + (1.0 - 2.0 * r) * std::pow(1.0 - d1, eta + 1.0);
      dq = std::pow(v, pw) - 1.0;
    } else {
      const double v = 2.0 * (1.0 - r) + 2.0 * (r - 0.5) * std::pow(1.0 - d2, eta + 1.0);
      dq = 1.0 - std::pow(v, pw);
    }
    x[i] = std::clamp(x[i] + dq * (up - lo), lo, up);
  }
}

inline VaccinePolicy to_policy(const std::vector<double>& genes, const BudgetConfig& b) {
  auto v = VaccinePolicy::zero(b.daily_cap.size(), b.t_start, b.t_end);
  v.doses = genes;
  return v;
}

}  // namespace detail

/// Elitist (mu + lambda) genetic algorithm over daily dose matrices. Genes
/// are bounded by the per-subpopulation caps, so only the daily budget can
/// be violated. The initial population holds the zero policy plus uniform
/// random draws. Returns the best feasible individual seen in any generation.
inline GaResult ga_optimize(const PolicyEvaluator& eval, const GaConfig& cfg) {
  cfg.validate();
  const auto& b = eval.budgets();
  const std::size_t K = b.daily_cap.size(), W = b.width(), G = K * W;
  std::vector<double> hi(G);
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t j = 0; j < W; ++j) hi[k * W + j] = b.daily_cap[k];

  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  auto evaluate = [&](std::vector<Individual>& pop) {
    std::vector<VaccinePolicy> batch;
    batch.reserve(pop.size());
    for (const auto& ind : pop) batch.push_back(detail::to_policy(ind.genes, b));
    const auto res = eval.evaluate_batch(batch);
    for (std::size_t i = 0; i < pop.size(); ++i) pop[i].objective = res[i].objective, pop[i].violation = res[i].violation;
  };

  std::vector<Individual> pop(cfg.population);
  pop[0].genes.assign(G, 0.0);
  for (std::size_t i = 1; i < pop.size(); ++i) {
    pop[i].genes.resize(G);
    for (std::size_t g = 0; g < G; ++g) pop[i].genes[g] = hi[g] * unif(rng);
  }
  evaluate(pop);

  GaResult out;
  Individual best;
  bool have_best = false;
  auto record = [&](std::size_t gen, const std::vector<Individual>& all) {
    for (const auto& ind : all)
      if (ind.violation <= 0.0 && (!have_best || ind.objective < best.objective)) best = ind, have_best = true;
    TraceRow row;
    row.generation = gen;
    if (have_best) row.best_feasible_objective = best.objective;
    row.best_violation = std::numeric_limits<double>::infinity();
    for (const auto& ind : all) row.best_violation = std::min(row.best_violation, ind.violation), row.mean_objective += ind.objective;
    row.mean_objective /= static_cast<double>(all.size());
    out.trace.push_back(row);
  };
  std::stable_sort(pop.begin(), pop.end(), better);
  record(0, pop);

  std::uniform_int_distribution<std::size_t> pick(0, cfg.population - 1);
  auto tournament = [&]() -> const Individual& {
    const std::size_t i = pick(rng), j = pick(rng);
    if (better(pop[j], pop[i])) return pop[j];
    if (better(pop[i], pop[j])) return pop[i];
    return pop[std::min(i, j)];
  };

  for (std::size_t gen = 1; gen <= cfg.generations; ++gen) {
    std::vector<Individual> children;
    children.reserve(cfg.population);
    while (children.size() < cfg.population) {
      Individual c1 = tournament(), c2 = tournament();
      if (unif(rng) <= cfg.p_crossover) detail::sbx(c1.genes, c2.genes, hi, cfg.eta_c, rng);
      detail::polynomial_mutation(c1.genes, hi, cfg.p_mutation, cfg.eta_m, rng);
      detail::polynomial_mutation(c2.genes, hi, cfg.p_mutation, cfg.eta_m, rng);
      children.push_back(std::move(c1));
      children.push_back(std::move(c2));
    }
    evaluate(children);
    pop.insert(pop.end(), std::make_move_iterator(children.begin()), std::make_move_iterator(children.end()));
    std::stable_sort(pop.begin(), pop.end(), better);
    pop.resize(cfg.population);
    record(gen, pop);
  }

  if (!have_best) throw OptimizationFailure("ga: no feasible policy found", out.trace.back().best_violation);
  out.policy = detail::to_policy(best.genes, b);
  out.evaluation = eval.evaluate(out.policy);
  return out;
}

/// Nominal formulation: the GA against a single scenario at the nominal point.
inline GaResult solve_nominal(const ModelSpec& model, const PopulationConfig& pop, const StateVector& x0,
                              const ParamVector& theta, const ObjectiveSpec& objective, const BudgetConfig& budgets,
                              const GaConfig& ga, std::size_t workers = default_workers()) {
  PolicyEvaluator eval(model, pop, x0, scenario::point_set(model.param_names, theta), objective, budgets, workers);
  return ga_optimize(eval, ga);
}

/// Stochastic formulation: the GA against the expected peak over Omega.
inline GaResult solve_stochastic(const ModelSpec& model, const PopulationConfig& pop, const StateVector& x0,
                                 const scenario::ScenarioSet& set, const ObjectiveSpec& objective,
                                 const BudgetConfig& budgets, const GaConfig& ga,
                                 std::size_t workers = default_workers()) {
  PolicyEvaluator eval(model, pop, x0, set, objective, budgets, workers);
  return ga_optimize(eval, ga);
}

}  // namespace epialloc::alloc
