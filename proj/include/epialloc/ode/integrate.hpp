#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include "epialloc/core/error.hpp"
#include "epialloc/ode/model.hpp"

namespace epialloc {

struct Trajectory {
  std::vector<double> times;
  std::vector<double> values;  // times.size() rows of `dim` entries
  std::size_t dim = 0;

  std::size_t size() const { return times.size(); }
  std::span<const double> state(std::size_t i) const { return {values.data() + i * dim, dim}; }
  double at(std::size_t i, std::size_t j) const { return values[i * dim + j]; }
};

struct IntegratorOptions {
  double step = 0.05;  // days
};

/// Integer-day grid 0, 1, ..., horizon.
inline std::vector<double> day_grid(int horizon, int start = 0) {
  std::vector<double> g;
  for (int d = start; d <= horizon; ++d) g.push_back(d);
  return g;
}

namespace detail {

inline void check_grid(std::span<const double> grid) {
  if (grid.empty()) throw StructuralError("simulate: empty time grid");
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (!(grid[i] > grid[i - 1])) throw DomainError("simulate: time grid must be strictly increasing");
}

inline void check_conservation(const CompiledModel& m, std::span<const double> x0) {
  for (std::size_t k = 0; k < m.K; ++k) {
    double sum = 0.0;
    for (std::size_t c = 0; c < m.nc; ++c) sum += x0[k * m.nc + c];
    if (std::abs(sum - m.N[k]) > 1e-8 * m.N[k])
      throw DomainError("simulate: initial state of subpopulation " + std::to_string(k) +
                        " sums to " + std::to_string(sum) + ", expected N_k");
  }
}

// Visits every RK4 step: fn(g, t, dt) for the steps of interval [grid[g-1], grid[g]].
// Each interval is split into ceil(width / h) equal steps.
template <typename Fn>
void for_each_step(std::span<const double> grid, double h, Fn&& fn) {
  for (std::size_t g = 1; g < grid.size(); ++g) {
    const double t0 = grid[g - 1];
    const double width = grid[g] - t0;
    const auto n = static_cast<std::size_t>(std::max(1.0, std::ceil(width / h - 1e-9)));
    const double dt = width / static_cast<double>(n);
    for (std::size_t s = 0; s < n; ++s) fn(g, t0 + dt * static_cast<double>(s), dt);
  }
}

// Onset factors at the three RK4 stage times (t, t + dt/2, t + dt) of every
// step, one series per subpopulation, laid out [3 * step + stage].
struct OnsetTable {
  std::vector<const double*> series;
};

inline std::vector<double> onset_series(double c1, double c2, std::span<const double> grid, double h) {
  std::vector<double> out;
  for_each_step(grid, h, [&](std::size_t, double t, double dt) {
    out.push_back(sigmoid_onset(c1, c2, t));
    out.push_back(sigmoid_onset(c1, c2, t + 0.5 * dt));
    out.push_back(sigmoid_onset(c1, c2, t + dt));
  });
  return out;
}

// Fixed-step classical RK4 over `grid`. The dose vector is fixed over a step
// and read on day floor(step start). `observe(i, x)` fires at grid[i].
template <typename Observer>
void integrate_rk4(const CompiledModel& m, std::span<const double> x0, std::span<const double> grid,
                   const VaccinePolicy* policy, double h, Observer&& observe, const OnsetTable* table = nullptr) {
  if (!(h > 0.0)) throw DomainError("simulate: step must be positive");
  const std::size_t dim = m.nc * m.K;
  std::vector<double> x(x0.begin(), x0.end());
  std::vector<double> k1(dim), k2(dim), k3(dim), k4(dim), tmp(dim), doses(m.K, 0.0);
  std::vector<double> u0, u1, u2;
  if (table && table->series.empty()) table = nullptr;
  if (table) u0.resize(m.K), u1.resize(m.K), u2.resize(m.K);

  observe(std::size_t{0}, std::span<const double>(x));
  long dose_day = std::numeric_limits<long>::min();
  std::size_t step = 0;
  std::size_t last_g = 1;
  for_each_step(grid, h, [&](std::size_t g, double t, double dt) {
    if (g != last_g) {
      observe(last_g, std::span<const double>(x));
      last_g = g;
    }
    if (m.vaccinated && policy) {
      const auto day = static_cast<long>(std::floor(t + 1e-9));
      if (day != dose_day) {
        for (std::size_t k = 0; k < m.K; ++k) doses[k] = policy->dose(k, day);
        dose_day = day;
      }
    }
    if (table)
      for (std::size_t k = 0; k < m.K; ++k) {
        const double* u = table->series[k] + 3 * step;
        u0[k] = u[0], u1[k] = u[1], u2[k] = u[2];
      }
    ++step;
    rhs_into(m, x, t, doses, k1, u0);
    for (std::size_t i = 0; i < dim; ++i) tmp[i] = x[i] + 0.5 * dt * k1[i];
    rhs_into(m, tmp, t + 0.5 * dt, doses, k2, u1);
    for (std::size_t i = 0; i < dim; ++i) tmp[i] = x[i] + 0.5 * dt * k2[i];
    rhs_into(m, tmp, t + 0.5 * dt, doses, k3, u1);
    for (std::size_t i = 0; i < dim; ++i) tmp[i] = x[i] + dt * k3[i];
    rhs_into(m, tmp, t + dt, doses, k4, u2);
    for (std::size_t i = 0; i < dim; ++i) x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);

    for (std::size_t k = 0; k < m.K; ++k) {
      const double slack = 1e-9 * m.N[k];
      for (std::size_t c = 0; c < m.nc; ++c) {
        double& v = x[k * m.nc + c];
        if (!std::isfinite(v)) throw IntegrationFailure(t + dt, "non-finite state");
        if (v < 0.0) {
          if (v < -slack) throw IntegrationFailure(t + dt, "compartment driven negative");
          v = 0.0;
        }
      }
    }
  });
  if (grid.size() > 1) observe(grid.size() - 1, std::span<const double>(x));
}

}  // namespace detail

/// Integrates the model from x0 = state at grid[0] and samples it on `grid`.
inline Trajectory simulate(const ModelSpec& model, const PopulationConfig& pop, std::span<const double> theta,
                           std::span<const double> x0, std::span<const double> grid,
                           const VaccinePolicy* policy = nullptr, const IntegratorOptions& opts = {}) {
  const auto m = detail::compile(model, pop, theta);
  if (x0.size() != m.nc * m.K) throw StructuralError("simulate: initial state dimension mismatch");
  detail::check_grid(grid);
  detail::check_conservation(m, x0);
  Trajectory traj;
  traj.dim = x0.size();
  traj.times.assign(grid.begin(), grid.end());
  traj.values.resize(grid.size() * traj.dim);
  detail::integrate_rk4(m, x0, grid, policy, opts.step, [&](std::size_t i, std::span<const double> x) {
    std::copy(x.begin(), x.end(), traj.values.begin() + static_cast<std::ptrdiff_t>(i * traj.dim));
  });
  return traj;
}

}  // namespace epialloc
