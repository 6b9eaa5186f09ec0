#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "epialloc/core/parallel.hpp"
#include "epialloc/scenario/distribution.hpp"

namespace epialloc::scenario {

struct ReduceConfig {
  std::size_t restarts = 10;
  std::size_t max_iterations = 300;
  std::uint64_t seed = 1;
  bool standardize = false;  // cluster on per-dimension z-scores instead of raw coordinates
  std::size_t workers = 1;
};

/// Reduced distribution plus diagnostics of the winning restart.
struct Reduction {
  DiscreteDistribution reduced;  // centroids with weights |I_j| / n
  std::vector<std::size_t> assignment;
  double cost = 0.0;                  // (1/n) sum_i ||x_i - centroid||^2 in raw coordinates
  std::vector<double> cost_history;   // clustering-space cost after each assignment step
  std::size_t iterations = 0;
};

namespace detail {

struct Clustering {
  std::vector<Point> centers;
  std::vector<std::size_t> assignment;
  std::vector<double> history;
  double cost = std::numeric_limits<double>::infinity();
  std::size_t iterations = 0;
};

inline std::vector<Point> kmeanspp_seed(const std::vector<Point>& x, std::size_t k, std::mt19937_64& rng) {
  const std::size_t n = x.size();
  std::vector<Point> centers;
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  centers.push_back(x[pick(rng)]);
  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = squared_distance(x[i], centers[0]);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  while (centers.size() < k) {
    double total = 0.0;
    for (double v : d2) total += v;
    std::size_t chosen = 0;
    if (total <= 0.0) {
      chosen = pick(rng);
    } else {
      const double r = unif(rng) * total;
      double acc = 0.0;
      chosen = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        acc += d2[i];
        if (acc > r) {
          chosen = i;
          break;
        }
      }
    }
    centers.push_back(x[chosen]);
    for (std::size_t i = 0; i < n; ++i) d2[i] = std::min(d2[i], squared_distance(x[i], centers.back()));
  }
  return centers;
}

inline Clustering lloyd(const std::vector<Point>& x, std::vector<Point> centers, const ReduceConfig& cfg) {
  const std::size_t n = x.size(), k = centers.size(), d = x.front().size();
  Clustering out;
  std::vector<std::size_t> assign(n, k);
  std::vector<double> dist(n);
  for (std::size_t it = 0; it < cfg.max_iterations; ++it) {
    std::vector<std::size_t> next(n);
    parallel_for(n, cfg.workers, [&](std::size_t i) {
      std::size_t best = 0;
      double bd = squared_distance(x[i], centers[0]);
      for (std::size_t j = 1; j < k; ++j) {
        const double dj = squared_distance(x[i], centers[j]);
        if (dj < bd) bd = dj, best = j;
      }
      next[i] = best;
      dist[i] = bd;
    });
    const bool stable = next == assign;
    assign = std::move(next);

    // Empty clusters take the point farthest from its current centre.
    std::vector<std::size_t> count(k, 0);
    for (std::size_t a : assign) ++count[a];
    for (std::size_t j = 0; j < k; ++j) {
      if (count[j] > 0) continue;
      std::size_t far = n;
      for (std::size_t i = 0; i < n; ++i)
        if (count[assign[i]] > 1 && (far == n || dist[i] > dist[far])) far = i;
      --count[assign[far]];
      assign[far] = j;
      dist[far] = 0.0;
      ++count[j];
    }
    double cost = 0.0;
    for (double v : dist) cost += v;
    cost /= static_cast<double>(n);
    out.history.push_back(cost);
    out.iterations = it + 1;

    std::vector<Point> sums(k, Point(d, 0.0));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t c = 0; c < d; ++c) sums[assign[i]][c] += x[i][c];
    for (std::size_t j = 0; j < k; ++j)
      for (std::size_t c = 0; c < d; ++c) centers[j][c] = sums[j][c] / static_cast<double>(count[j]);
    if (stable) break;
  }

  // Hartigan refinement: move single points while a transfer lowers the total
  // within-cluster cost, accounting for the shift of both centroids.
  std::vector<std::size_t> count(k, 0);
  for (std::size_t a : assign) ++count[a];
  for (std::size_t pass = 0; pass < cfg.max_iterations; ++pass) {
    bool moved = false;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t a = assign[i];
      if (count[a] < 2) continue;
      const double na = static_cast<double>(count[a]);
      const double remove = na / (na - 1.0) * squared_distance(x[i], centers[a]);
      std::size_t to = a;
      double add = remove;
      for (std::size_t j = 0; j < k; ++j) {
        if (j == a) continue;
        const double nj = static_cast<double>(count[j]);
        const double c = nj / (nj + 1.0) * squared_distance(x[i], centers[j]);
        if (c < add) add = c, to = j;
      }
      if (to == a || add >= remove * (1.0 - 1e-12)) continue;
      const double nt = static_cast<double>(count[to]);
      for (std::size_t c = 0; c < d; ++c) {
        centers[a][c] = (centers[a][c] * na - x[i][c]) / (na - 1.0);
        centers[to][c] = (centers[to][c] * nt + x[i][c]) / (nt + 1.0);
      }
      --count[a], ++count[to];
      assign[i] = to;
      moved = true;
    }
    if (!moved) break;
    std::vector<Point> sums(k, Point(d, 0.0));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t c = 0; c < d; ++c) sums[assign[i]][c] += x[i][c];
    for (std::size_t j = 0; j < k; ++j)
      for (std::size_t c = 0; c < d; ++c) centers[j][c] = sums[j][c] / static_cast<double>(count[j]);
    double cost = 0.0;
    for (std::size_t i = 0; i < n; ++i) cost += squared_distance(x[i], centers[assign[i]]);
    out.history.push_back(cost / static_cast<double>(n));
  }

  double cost = 0.0;
  for (std::size_t i = 0; i < n; ++i) cost += squared_distance(x[i], centers[assign[i]]);
  out.cost = cost / static_cast<double>(n);
  out.centers = std::move(centers);
  out.assignment = std::move(assign);
  return out;
}

}  // namespace detail

/// k-means reduction of the uniform empirical distribution over `points`:
/// Lloyd's algorithm from k-means++ seeds, best of `restarts` runs. The
/// returned locations are cluster means in raw coordinates and the weights
/// are cluster sizes over n.
inline Reduction reduce_scenarios(const std::vector<Point>& points, std::size_t k, const ReduceConfig& cfg = {}) {
  if (k == 0) throw DomainError("reduce: k must be positive");
  if (points.empty()) throw DomainError("reduce: no points");
  if (k > points.size()) throw DomainError("reduce: k exceeds the number of points");
  if (cfg.restarts == 0 || cfg.max_iterations == 0) throw DomainError("reduce: restarts and iterations must be positive");
  const std::size_t n = points.size(), d = points.front().size();
  for (const auto& p : points)
    if (p.size() != d) throw StructuralError("reduce: points differ in dimension");

  std::vector<Point> x = points;
  if (cfg.standardize) {
    for (std::size_t c = 0; c < d; ++c) {
      double mean = 0.0, ss = 0.0;
      for (const auto& p : points) mean += p[c];
      mean /= static_cast<double>(n);
      for (const auto& p : points) ss += (p[c] - mean) * (p[c] - mean);
      const double sd = std::sqrt(ss / static_cast<double>(n));
      for (auto& p : x) p[c] = sd > 0.0 ? (p[c] - mean) / sd : 0.0;
    }
  }

  std::mt19937_64 rng(cfg.seed);
  detail::Clustering best;
  for (std::size_t r = 0; r < cfg.restarts; ++r) {
    auto run = detail::lloyd(x, detail::kmeanspp_seed(x, k, rng), cfg);
    if (run.cost < best.cost) best = std::move(run);
  }

  Reduction out;
  out.assignment = best.assignment;
  out.cost_history = best.history;
  out.iterations = best.iterations;
  std::vector<std::size_t> count(k, 0);
  std::vector<Point> sums(k, Point(d, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    ++count[out.assignment[i]];
    for (std::size_t c = 0; c < d; ++c) sums[out.assignment[i]][c] += points[i][c];
  }
  for (std::size_t j = 0; j < k; ++j) {
    for (double& v : sums[j]) v /= static_cast<double>(count[j]);
    out.reduced.locations.push_back(sums[j]);
    out.reduced.probabilities.push_back(static_cast<double>(count[j]) / static_cast<double>(n));
  }
  double cost = 0.0;
  for (std::size_t i = 0; i < n; ++i) cost += squared_distance(points[i], out.reduced.locations[out.assignment[i]]);
  out.cost = cost / static_cast<double>(n);
  return out;
}

}  // namespace epialloc::scenario
