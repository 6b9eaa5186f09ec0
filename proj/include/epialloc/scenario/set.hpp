#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "epialloc/core/error.hpp"
#include "epialloc/ode/model.hpp"
#include "epialloc/scenario/reduce.hpp"

namespace epialloc::scenario {

struct Scenario {
  ParamVector theta;
  std::vector<double> c2;  // per-subpopulation onset midpoint; empty means the population default
  double p = 0.0;
};

/// Weighted scenario set Omega.
struct ScenarioSet {
  std::vector<std::string> param_names;
  std::vector<Scenario> scenarios;
  std::string source_chain;
  std::size_t k = 0;
  std::uint64_t seed = 0;

  std::size_t size() const { return scenarios.size(); }

  void validate(const std::vector<Interval>& bounds = {}) const {
    if (scenarios.empty()) throw DomainError("scenario set: empty");
    double total = 0.0;
    for (const auto& s : scenarios) {
      if (s.theta.size() != param_names.size()) throw StructuralError("scenario set: theta width differs from names");
      if (!(s.p >= 0.0)) throw DomainError("scenario set: negative probability");
      if (!bounds.empty())
        for (std::size_t i = 0; i < s.theta.size(); ++i)
          if (!bounds[i].contains(s.theta[i])) throw DomainError("scenario set: parameter outside bounds");
      total += s.p;
    }
    if (std::abs(total - 1.0) > 1e-10) throw DomainError("scenario set: probabilities do not sum to 1");
  }
};

inline ScenarioSet from_reduction(const Reduction& r, std::vector<std::string> param_names) {
  ScenarioSet set;
  set.param_names = std::move(param_names);
  for (std::size_t j = 0; j < r.reduced.size(); ++j) set.scenarios.push_back({r.reduced.locations[j], {}, r.reduced.probabilities[j]});
  set.k = r.reduced.size();
  return set;
}

/// Single scenario at theta with probability one.
inline ScenarioSet point_set(std::vector<std::string> param_names, ParamVector theta, std::vector<double> c2 = {}) {
  ScenarioSet set;
  set.param_names = std::move(param_names);
  set.scenarios.push_back({std::move(theta), std::move(c2), 1.0});
  set.k = 1;
  return set;
}

/// Replicates every base scenario across the Cartesian product of the
/// per-subpopulation onset grids, scaling probabilities by 1 / prod(m_k).
/// Combinations vary the last subpopulation fastest.
inline ScenarioSet augment_onset(const ScenarioSet& base, const std::vector<std::vector<double>>& grids) {
  if (grids.empty()) throw DomainError("augment: no onset grids");
  std::size_t combos = 1;
  for (const auto& g : grids) {
    if (g.empty()) throw DomainError("augment: empty onset list");
    combos *= g.size();
  }
  ScenarioSet out = base;
  out.scenarios.clear();
  out.scenarios.reserve(base.size() * combos);
  const double scale = 1.0 / static_cast<double>(combos);
  std::vector<std::size_t> idx(grids.size());
  for (const auto& s : base.scenarios) {
    std::fill(idx.begin(), idx.end(), 0);
    for (std::size_t c = 0; c < combos; ++c) {
      Scenario a{s.theta, {}, combos == 1 ? s.p : s.p * scale};
      for (std::size_t k = 0; k < grids.size(); ++k) a.c2.push_back(grids[k][idx[k]]);
      out.scenarios.push_back(std::move(a));
      for (std::size_t k = grids.size(); k-- > 0;) {
        if (++idx[k] < grids[k].size()) break;
        idx[k] = 0;
      }
    }
  }
  return out;
}

namespace detail {

inline double weighted_quantile(std::vector<std::pair<double, double>> vw, double q) {
  std::sort(vw.begin(), vw.end());
  double total = 0.0;
  for (const auto& [v, w] : vw) total += w;
  double acc = 0.0;
  for (const auto& [v, w] : vw) {
    acc += w;
    if (acc >= q * total) return v;
  }
  return vw.back().first;
}

}  // namespace detail

/// Per-dimension mode: midpoint of the heaviest bin of a weighted histogram
/// whose width follows the Freedman-Diaconis rule, with at least 50 bins.
inline ParamVector distribution_mode(const std::vector<Point>& points, const std::vector<double>& weights) {
  if (points.empty()) throw DomainError("mode: empty input");
  if (weights.size() != points.size()) throw StructuralError("mode: one weight per point");
  const std::size_t d = points.front().size(), n = points.size();
  ParamVector mode(d);
  for (std::size_t c = 0; c < d; ++c) {
    std::vector<std::pair<double, double>> vw;
    double lo = points[0][c], hi = points[0][c];
    for (std::size_t i = 0; i < n; ++i) {
      vw.emplace_back(points[i][c], weights[i]);
      lo = std::min(lo, points[i][c]);
      hi = std::max(hi, points[i][c]);
    }
    if (!(hi > lo)) {
      mode[c] = lo;
      continue;
    }
    const double iqr = detail::weighted_quantile(vw, 0.75) - detail::weighted_quantile(vw, 0.25);
    std::size_t bins = 50;
    if (iqr > 0.0) {
      const double h = 2.0 * iqr / std::cbrt(static_cast<double>(n));
      bins = std::clamp<std::size_t>(static_cast<std::size_t>(std::ceil((hi - lo) / h)), 50, 10'000);
    }
    const double width = (hi - lo) / static_cast<double>(bins);
    std::vector<double> mass(bins, 0.0);
    for (const auto& [v, w] : vw) mass[std::min(bins - 1, static_cast<std::size_t>((v - lo) / width))] += w;
    const auto top = static_cast<std::size_t>(std::max_element(mass.begin(), mass.end()) - mass.begin());
    mode[c] = lo + (static_cast<double>(top) + 0.5) * width;
  }
  return mode;
}

inline ParamVector distribution_mode(const ScenarioSet& set) {
  std::vector<Point> pts;
  std::vector<double> w;
  for (const auto& s : set.scenarios) pts.push_back(s.theta), w.push_back(s.p);
  return distribution_mode(pts, w);
}

inline ParamVector distribution_mode(const std::vector<ParamVector>& samples) {
  return distribution_mode(samples, std::vector<double>(samples.size(), 1.0));
}

inline nlohmann::json to_json(const ScenarioSet& set) {
  nlohmann::json sc = nlohmann::json::array();
  for (const auto& s : set.scenarios) sc.push_back({{"theta", s.theta}, {"c2", s.c2}, {"p", s.p}});
  return {{"param_names", set.param_names}, {"scenarios", sc}, {"source_chain", set.source_chain},
          {"k", set.k}, {"seed", set.seed}};
}

inline ScenarioSet scenario_set_from_json(const nlohmann::json& j) {
  ScenarioSet set;
  set.param_names = j.at("param_names").get<std::vector<std::string>>();
  for (const auto& s : j.at("scenarios"))
    set.scenarios.push_back({s.at("theta").get<ParamVector>(), s.at("c2").get<std::vector<double>>(), s.at("p").get<double>()});
  set.source_chain = j.value("source_chain", "");
  set.k = j.value("k", set.scenarios.size());
  set.seed = j.value("seed", std::uint64_t{0});
  set.validate();
  return set;
}

}  // namespace epialloc::scenario
