#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "epialloc/scenario/distribution.hpp"

namespace epialloc::scenario {

namespace detail {

/// Min-cost flow on the complete bipartite transport network, solved by
/// successive shortest paths with Dijkstra on reduced costs (dense O(V^2)).
class TransportSolver {
 public:
  TransportSolver(std::vector<double> supply, std::vector<double> demand, std::vector<double> cost)
      : n_(supply.size()), m_(demand.size()), supply_(std::move(supply)), demand_(std::move(demand)),
        cost_(std::move(cost)), flow_(n_ * m_, 0.0) {}

  double solve() {
    constexpr double eps = 1e-15;
    const double inf = std::numeric_limits<double>::infinity();
    // Nodes: 0..n-1 sources, n..n+m-1 sinks. Every arc i->j is uncapacitated;
    // a reverse arc j->i exists wherever flow_(i,j) > 0.
    std::vector<double> pot(n_ + m_, 0.0);
    std::vector<double> dist(n_ + m_);
    std::vector<std::ptrdiff_t> prev(n_ + m_);
    std::vector<char> done(n_ + m_);
    double total = 0.0;
    for (double s : supply_) total += s;
    double shipped = 0.0;
    std::size_t guard = 0;
    while (shipped < total - 1e-14 && guard++ < 100 * (n_ + m_) * (n_ + m_) + 100) {
      std::fill(dist.begin(), dist.end(), inf);
      std::fill(prev.begin(), prev.end(), -1);
      std::fill(done.begin(), done.end(), 0);
      for (std::size_t i = 0; i < n_; ++i)
        if (supply_[i] > eps) dist[i] = 0.0;
      while (true) {
        std::size_t u = n_ + m_;
        for (std::size_t v = 0; v < n_ + m_; ++v)
          if (!done[v] && dist[v] < inf && (u == n_ + m_ || dist[v] < dist[u])) u = v;
        if (u == n_ + m_) break;
        done[u] = 1;
        if (u < n_) {
          for (std::size_t j = 0; j < m_; ++j) {
            const double rc = cost_[u * m_ + j] + pot[u] - pot[n_ + j];
            const double nd = dist[u] + std::max(rc, 0.0);
            if (nd < dist[n_ + j]) dist[n_ + j] = nd, prev[n_ + j] = static_cast<std::ptrdiff_t>(u);
          }
        } else {
          const std::size_t j = u - n_;
          for (std::size_t i = 0; i < n_; ++i) {
            if (flow_[i * m_ + j] <= eps) continue;
            const double rc = -cost_[i * m_ + j] + pot[u] - pot[i];
            const double nd = dist[u] + std::max(rc, 0.0);
            if (nd < dist[i]) dist[i] = nd, prev[i] = static_cast<std::ptrdiff_t>(u);
          }
        }
      }
      std::size_t best = n_ + m_;
      for (std::size_t j = 0; j < m_; ++j)
        if (demand_[j] > eps && dist[n_ + j] < inf && (best == n_ + m_ || dist[n_ + j] < dist[best])) best = n_ + j;
      if (best == n_ + m_) break;
      for (std::size_t v = 0; v < n_ + m_; ++v)
        if (dist[v] < inf) pot[v] += dist[v];

      double push = demand_[best - n_];
      std::size_t v = best;
      while (prev[v] >= 0) {
        const auto u = static_cast<std::size_t>(prev[v]);
        if (u >= n_) push = std::min(push, flow_[v * m_ + (u - n_)]);
        v = u;
      }
      push = std::min(push, supply_[v]);
      v = best;
      while (prev[v] >= 0) {
        const auto u = static_cast<std::size_t>(prev[v]);
        if (u < n_)
          flow_[u * m_ + (v - n_)] += push;
        else
          flow_[v * m_ + (u - n_)] -= push;
        v = u;
      }
      supply_[v] -= push;
      demand_[best - n_] -= push;
      shipped += push;
    }
    double c = 0.0;
    for (std::size_t k = 0; k < flow_.size(); ++k) c += flow_[k] * cost_[k];
    return c;
  }

  const std::vector<double>& plan() const { return flow_; }

 private:
  std::size_t n_, m_;
  std::vector<double> supply_, demand_, cost_, flow_;
};

}  // namespace detail

/// Optimal transport cost min_pi sum_ij pi_ij ||x_i - z_j||^l over couplings of P and Q.
inline double transport_cost(const DiscreteDistribution& P, const DiscreteDistribution& Q, double l = 2.0) {
  P.validate(1e-9);
  Q.validate(1e-9);
  if (P.dim() != Q.dim()) throw StructuralError("wasserstein: dimension mismatch");
  if (P.size() * Q.size() > 10'000) throw DomainError("wasserstein: instance exceeds oracle size n*m <= 1e4");
  if (!(l >= 1.0)) throw DomainError("wasserstein: order must be >= 1");
  double sp = 0.0, sq = 0.0;
  for (double p : P.probabilities) sp += p;
  for (double q : Q.probabilities) sq += q;
  if (std::abs(sp - sq) > 1e-9) throw DomainError("wasserstein: probability mass mismatch");
  std::vector<double> cost(P.size() * Q.size());
  for (std::size_t i = 0; i < P.size(); ++i)
    for (std::size_t j = 0; j < Q.size(); ++j)
      cost[i * Q.size() + j] = std::pow(std::sqrt(squared_distance(P.locations[i], Q.locations[j])), l);
  // Rescale the demand so both sides carry identical mass.
  std::vector<double> demand = Q.probabilities;
  for (double& q : demand) q *= sp / sq;
  detail::TransportSolver solver(P.probabilities, std::move(demand), std::move(cost));
  return std::max(solver.solve(), 0.0);
}

/// Type-l Wasserstein distance between two discrete distributions.
inline double wasserstein_distance(const DiscreteDistribution& P, const DiscreteDistribution& Q, double l = 2.0) {
  return std::pow(transport_cost(P, Q, l), 1.0 / l);
}

}  // namespace epialloc::scenario
