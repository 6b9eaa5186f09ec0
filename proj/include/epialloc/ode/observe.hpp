#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "epialloc/core/error.hpp"
#include "epialloc/ode/integrate.hpp"

namespace epialloc {

/// Noisy per-state observations on a common time grid.
struct TimeSeriesData {
  std::vector<double> times;
  std::vector<std::string> state_names;
  std::vector<std::vector<double>> values;  // values[state][time]
  std::vector<double> noise_sigma;          // per state

  std::size_t n_states() const { return values.size(); }
  std::size_t n_times() const { return times.size(); }

  void validate() const {
    for (std::size_t i = 1; i < times.size(); ++i)
      if (!(times[i] > times[i - 1])) throw DomainError("observations: times must be strictly increasing");
    if (state_names.size() != values.size()) throw StructuralError("observations: one name per state row");
    for (const auto& row : values)
      if (row.size() != times.size()) throw StructuralError("observations: row length differs from time count");
    if (!noise_sigma.empty() && noise_sigma.size() != values.size())
      throw StructuralError("observations: one sigma per state");
  }
};

/// Adds N(0, sigma_j^2) noise to every trajectory entry at times >= t_from.
/// Draws are taken time-major from a seeded mt19937_64, so equal seeds give equal data.
inline TimeSeriesData generate_noisy_observations(const Trajectory& traj, std::span<const double> sigma,
                                                  std::uint64_t seed, std::vector<std::string> labels = {},
                                                  double t_from = -std::numeric_limits<double>::infinity()) {
  if (sigma.size() != traj.dim) throw StructuralError("observations: one sigma per trajectory column required");
  for (double s : sigma)
    if (!(s >= 0.0)) throw DomainError("observations: sigma must be >= 0");
  if (labels.empty())
    for (std::size_t j = 0; j < traj.dim; ++j) labels.push_back("x" + std::to_string(j));
  if (labels.size() != traj.dim) throw StructuralError("observations: one label per column required");

  TimeSeriesData data;
  data.state_names = std::move(labels);
  data.noise_sigma.assign(sigma.begin(), sigma.end());
  data.values.assign(traj.dim, {});
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t i = 0; i < traj.size(); ++i) {
    if (traj.times[i] < t_from) continue;
    data.times.push_back(traj.times[i]);
    for (std::size_t j = 0; j < traj.dim; ++j) {
      const double eps = normal(rng);
      data.values[j].push_back(traj.at(i, j) + sigma[j] * eps);
    }
  }
  return data;
}

}  // namespace epialloc
