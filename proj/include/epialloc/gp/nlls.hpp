#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "epialloc/core/error.hpp"
#include "epialloc/core/simplex.hpp"
#include "epialloc/gp/density.hpp"
#include "epialloc/ode/integrate.hpp"
#include "epialloc/ode/observe.hpp"

namespace epialloc::gp {

struct NllsOptions {
  std::size_t starts = 8;  // the box centre plus starts-1 uniform draws
  std::uint64_t seed = 7;
  std::size_t polish_rounds = 4;
  IntegratorOptions integrator{};
};

struct NllsResult {
  ParamVector theta;
  double residual = 0.0;  // sum of squared residuals over all observed entries
};

/// Sum of squared residuals between the simulated trajectory (from x0 at t0)
/// and every observed state row that names a model state.
inline double nlls_objective(const TimeSeriesData& data, const ModelSpec& model, const PopulationConfig& pop,
                             std::span<const double> x0, double t0, std::span<const double> theta,
                             const IntegratorOptions& integrator = {}) {
  const auto labels = state_labels(model, pop);
  std::vector<double> grid{t0};
  for (double t : data.times)
    if (t > t0) grid.push_back(t);
  const auto traj = simulate(model, pop, theta, x0, grid, nullptr, integrator);
  double ssr = 0.0;
  for (std::size_t r = 0; r < data.n_states(); ++r) {
    std::optional<std::size_t> col;
    for (std::size_t j = 0; j < labels.size(); ++j)
      if (labels[j] == data.state_names[r]) col = j;
    if (!col) continue;
    std::size_t g = 0;
    for (std::size_t i = 0; i < data.n_times(); ++i) {
      const double t = data.times[i];
      double model_value;
      if (t == t0) {
        model_value = x0[*col];
      } else {
        while (grid[g] != t) ++g;
        model_value = traj.at(g, *col);
      }
      const double d = data.values[r][i] - model_value;
      ssr += d * d;
    }
  }
  return ssr;
}

/// Multi-start Nelder-Mead on the box-constrained least-squares problem.
/// Parameters are searched through a logistic map onto their bound box.
inline NllsResult nlls_fit(const TimeSeriesData& data, const ModelSpec& model, const PopulationConfig& pop,
                           std::span<const double> x0, double t0 = 0.0, const NllsOptions& opts = {}) {
  data.validate();
  if (data.n_times() == 0) throw DomainError("nlls: no observations");
  const std::size_t P = model.n_params();
  const auto& b = model.param_bounds;

  auto to_theta = [&](std::span<const double> z) {
    ParamVector th(P);
    for (std::size_t p = 0; p < P; ++p) th[p] = b[p].lo + b[p].width() / (1.0 + std::exp(-z[p]));
    return th;
  };
  auto to_z = [&](std::span<const double> th) {
    std::vector<double> z(P);
    for (std::size_t p = 0; p < P; ++p) {
      const double u = std::clamp((th[p] - b[p].lo) / b[p].width(), 1e-9, 1.0 - 1e-9);
      z[p] = std::log(u / (1.0 - u));
    }
    return z;
  };
  auto ssr_at = [&](std::span<const double> th) -> double {
    try {
      return nlls_objective(data, model, pop, x0, t0, th, opts.integrator);
    } catch (const IntegrationFailure&) {
      return std::numeric_limits<double>::infinity();
    }
  };
  auto objective = [&](std::span<const double> z) { return ssr_at(to_theta(z)); };

  std::mt19937_64 rng(opts.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<ParamVector> starts;
  ParamVector centre(P);
  for (std::size_t p = 0; p < P; ++p) centre[p] = b[p].mid();
  starts.push_back(centre);
  for (std::size_t s = 1; s < opts.starts; ++s) {
    ParamVector th(P);
    for (std::size_t p = 0; p < P; ++p) th[p] = b[p].lo + b[p].width() * unif(rng);
    starts.push_back(th);
  }

  NllsResult best{{}, std::numeric_limits<double>::infinity()};
  for (const auto& th0 : starts) {
    const double f0 = ssr_at(th0);
    if (f0 < best.residual) best = {th0, f0};
    if (!std::isfinite(f0)) continue;
    auto z = to_z(th0);
    double fz = f0;
    double step = 1.0;
    // Restarting the simplex around the incumbent escapes premature collapse.
    for (std::size_t round = 0; round <= opts.polish_rounds; ++round) {
      const auto r = nelder_mead(objective, z, {.initial_step = step, .size_tol = 1e-12, .max_iterations = 20000});
      if (r.value < fz) {
        z = r.x;
        fz = r.value;
      }
      step = 0.1;
    }
    if (fz < best.residual) best = {to_theta(z), fz};
  }
  if (!std::isfinite(best.residual)) throw OptimizationFailure("nlls: every start failed to integrate");
  return best;
}

}  // namespace epialloc::gp
