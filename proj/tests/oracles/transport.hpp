#pragma once

// Brute-force oracles for small transport and clustering instances.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using Points = std::vector<std::vector<double>>;

inline double sqdist(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

// Minimum of c.x over the extreme points of {x >= 0 : row sums = p, column
// sums = q}, found by solving every square basis of the equality system.
inline double transport_by_vertices(const std::vector<double>& p, const std::vector<double>& q,
                                    const std::vector<double>& cost) {
  const std::size_t n = p.size(), m = q.size(), vars = n * m;
  // Drop one redundant column-sum row: rank is n + m - 1.
  const std::size_t rows = n + m - 1;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(vars));
  Eigen::VectorXd b(static_cast<Eigen::Index>(rows));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) A(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i * m + j)) = 1;
    b(static_cast<Eigen::Index>(i)) = p[i];
  }
  for (std::size_t j = 0; j + 1 < m; ++j) {
    for (std::size_t i = 0; i < n; ++i) A(static_cast<Eigen::Index>(n + j), static_cast<Eigen::Index>(i * m + j)) = 1;
    b(static_cast<Eigen::Index>(n + j)) = q[j];
  }
  double best = std::numeric_limits<double>::infinity();
  std::vector<int> pick(vars, 0);
  std::fill(pick.end() - static_cast<std::ptrdiff_t>(rows), pick.end(), 1);
  do {
    Eigen::MatrixXd B(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(rows));
    std::vector<std::size_t> cols;
    for (std::size_t v = 0; v < vars; ++v)
      if (pick[v]) cols.push_back(v);
    for (std::size_t c = 0; c < rows; ++c) B.col(static_cast<Eigen::Index>(c)) = A.col(static_cast<Eigen::Index>(cols[c]));
    Eigen::FullPivLU<Eigen::MatrixXd> lu(B);
    if (lu.rank() < static_cast<Eigen::Index>(rows)) continue;
    const Eigen::VectorXd x = lu.solve(b);
    if ((x.array() < -1e-12).any()) continue;
    double c = 0;
    for (std::size_t k = 0; k < rows; ++k) c += x(static_cast<Eigen::Index>(k)) * cost[cols[k]];
    best = std::min(best, c);
  } while (std::next_permutation(pick.begin(), pick.end()));
  return best;
}

// Calls visit(labels) for every partition of n items into 1..max_blocks
// nonempty blocks (restricted growth strings).
inline void for_each_partition(std::size_t n, std::size_t max_blocks,
                               const std::function<void(const std::vector<std::size_t>&)>& visit) {
  std::vector<std::size_t> a(n, 0);
  std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t i, std::size_t used) {
    if (i == n) {
      visit(a);
      return;
    }
    for (std::size_t b = 0; b <= used && b < max_blocks; ++b) {
      a[i] = b;
      rec(i + 1, std::max(used, b + 1));
    }
  };
  rec(0, 0);
}

// Centroids and weights of a labelled partition of uniformly weighted points.
inline std::pair<Points, std::vector<double>> partition_centroids(const Points& x, const std::vector<std::size_t>& lab) {
  std::size_t k = 0;
  for (auto l : lab) k = std::max(k, l + 1);
  Points c(k, std::vector<double>(x[0].size(), 0.0));
  std::vector<double> cnt(k, 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    cnt[lab[i]] += 1;
    for (std::size_t d = 0; d < x[i].size(); ++d) c[lab[i]][d] += x[i][d];
  }
  for (std::size_t j = 0; j < k; ++j)
    for (auto& v : c[j]) v /= cnt[j];
  std::vector<double> w(k);
  for (std::size_t j = 0; j < k; ++j) w[j] = cnt[j] / static_cast<double>(x.size());
  return {c, w};
}

// Exact type-2 transport cost from n uniformly weighted points to locations
// with weights counts[j] / n. Such an LP has an integral optimum, so it is the
// cheapest labelling of the points that fills every location to its count.
inline double capacitated_assignment(const Points& x, const Points& locs, const std::vector<std::size_t>& counts) {
  const std::size_t n = x.size(), m = locs.size();
  std::vector<std::size_t> lab(n, 0), used(m, 0);
  double best = std::numeric_limits<double>::infinity();
  std::function<void(std::size_t, double)> rec = [&](std::size_t i, double acc) {
    if (acc >= best) return;
    if (i == n) {
      best = acc;
      return;
    }
    for (std::size_t j = 0; j < m; ++j) {
      if (used[j] == counts[j]) continue;
      ++used[j];
      rec(i + 1, acc + sqdist(x[i], locs[j]));
      --used[j];
    }
  };
  rec(0, 0.0);
  return best / static_cast<double>(n);
}

}  // namespace oracle
