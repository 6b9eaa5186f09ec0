#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "epialloc/core/error.hpp"

namespace epialloc::scenario {

using Point = std::vector<double>;

/// Finitely supported probability measure sum_i p_i delta_{x_i}.
struct DiscreteDistribution {
  std::vector<Point> locations;
  std::vector<double> probabilities;

  std::size_t size() const { return locations.size(); }
  std::size_t dim() const { return locations.empty() ? 0 : locations.front().size(); }

  static DiscreteDistribution uniform(std::vector<Point> points) {
    DiscreteDistribution d;
    const double w = points.empty() ? 0.0 : 1.0 / static_cast<double>(points.size());
    d.probabilities.assign(points.size(), w);
    d.locations = std::move(points);
    return d;
  }

  void validate(double tol = 1e-12) const {
    if (locations.size() != probabilities.size()) throw StructuralError("distribution: one probability per location");
    if (locations.empty()) throw DomainError("distribution: empty support");
    double total = 0.0;
    for (std::size_t i = 0; i < size(); ++i) {
      if (locations[i].size() != dim()) throw StructuralError("distribution: locations differ in dimension");
      for (double v : locations[i])
        if (!std::isfinite(v)) throw DomainError("distribution: non-finite location");
      if (!(probabilities[i] >= 0.0)) throw DomainError("distribution: negative probability");
      total += probabilities[i];
    }
    if (std::abs(total - 1.0) > tol) throw DomainError("distribution: probabilities do not sum to 1");
  }
};

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

}  // namespace epialloc::scenario
