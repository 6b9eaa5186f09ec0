#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "epialloc/core/error.hpp"
#include "epialloc/core/simplex.hpp"
#include "epialloc/gp/kernel.hpp"
#include "epialloc/ode/observe.hpp"

namespace epialloc::gp {

struct FitOptions {
  double lambda = 1e-2;  // gradient-mismatch variance attached to every state
};

namespace detail {

inline double sample_std(std::span<const double> y) {
  const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
  double ss = 0.0;
  for (double v : y) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(y.size()));
}

}  // namespace detail

/// Maximizes the zero-mean log marginal likelihood of one centered series
/// over (sigma_f, length_scale, sigma_obs), searching in log space from a
/// grid of length-scale / noise starts. The best start point is kept if no
/// local search improves on it.
inline StateHyperParams fit_state_hyperparams(std::span<const double> times, std::span<const double> y) {
  if (times.size() < 3) throw DomainError("gp fit: at least 3 observations per state required");
  if (times.back() - times.front() <= 0.0) throw DomainError("gp fit: observation times are degenerate");
  check_times(times);

  const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
  std::vector<double> yc(y.begin(), y.end());
  for (double& v : yc) v -= mean;
  const double scale = std::max(detail::sample_std(yc), 1e-12);
  const double span = times.back() - times.front();
  double min_gap = span;
  for (std::size_t i = 1; i < times.size(); ++i) min_gap = std::min(min_gap, times[i] - times[i - 1]);

  // Box in log space keeps the search away from numerically singular corners.
  const std::array<double, 3> lo{std::log(1e-3 * scale), std::log(0.25 * min_gap), std::log(1e-6 * scale)};
  const std::array<double, 3> hi{std::log(1e3 * scale), std::log(10.0 * span), std::log(2.0 * scale)};
  auto decode = [&](std::span<const double> z) {
    StateHyperParams hp;
    hp.sigma_f = std::exp(std::clamp(z[0], lo[0], hi[0]));
    hp.length_scale = std::exp(std::clamp(z[1], lo[1], hi[1]));
    hp.sigma_obs = std::exp(std::clamp(z[2], lo[2], hi[2]));
    return hp;
  };
  auto objective = [&](std::span<const double> z) -> double {
    double penalty = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
      const double over = std::max(0.0, z[i] - hi[i]) + std::max(0.0, lo[i] - z[i]);
      penalty += 1e3 * over * over;
    }
    try {
      return -log_marginal_likelihood(times, yc, decode(z)) + penalty;
    } catch (const NumericalError&) {
      return 1e300;
    }
  };

  std::vector<double> best_z;
  double best = 1e300;
  for (double lf : {0.5, 1.0, 2.0, 4.0, 8.0}) {
    for (double nf : {1e-3, 1e-1}) {
      std::vector<double> z0{std::log(scale), std::log(std::clamp(lf * min_gap * 2.0, std::exp(lo[1]), std::exp(hi[1]))),
                             std::log(nf * scale)};
      const double f0 = objective(z0);
      if (f0 < best) best = f0, best_z = z0;
      const auto r = nelder_mead(objective, z0, {.initial_step = 0.5, .size_tol = 1e-8, .max_iterations = 4000});
      if (r.value < best) best = r.value, best_z = r.x;
    }
  }
  if (best_z.empty()) throw NumericalError("gp fit: no start produced a finite likelihood");
  return decode(best_z);
}

/// Fits every state of `data` independently.
inline GpHyperParams fit_gp_hyperparams(const TimeSeriesData& data, const FitOptions& opts = {}) {
  data.validate();
  GpHyperParams hp;
  hp.states = data.state_names;
  for (const auto& row : data.values) {
    hp.per_state.push_back(fit_state_hyperparams(data.times, row));
    hp.lambda.push_back(opts.lambda);
  }
  return hp;
}

}  // namespace epialloc::gp
