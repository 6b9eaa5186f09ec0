#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "epialloc/alloc/ga.hpp"
#include "epialloc/io/csv.hpp"

namespace epialloc::alloc {

struct PolicyProvenance {
  std::string mode;  // nominal, stochastic or zero
  std::uint64_t seed = 0;
  GaConfig ga;
  std::string scenario_set;
};

inline nlohmann::json to_json(const GaConfig& g) {
  return {{"population", g.population}, {"generations", g.generations}, {"p_crossover", g.p_crossover},
          {"p_mutation", g.p_mutation}, {"eta_c", g.eta_c}, {"eta_m", g.eta_m}, {"seed", g.seed}};
}

inline nlohmann::json to_json(const VaccinePolicy& v, const std::vector<std::string>& subpop_names,
                              const PolicyProvenance& prov) {
  std::vector<std::vector<double>> V(v.K, std::vector<double>(v.width()));
  for (std::size_t k = 0; k < v.K; ++k)
    for (std::size_t j = 0; j < v.width(); ++j) V[k][j] = v.at(k, j);
  return {{"window", {v.t_start, v.t_end}},
          {"subpop_names", subpop_names},
          {"V", V},
          {"provenance",
           {{"mode", prov.mode}, {"seed", prov.seed}, {"ga", to_json(prov.ga)}, {"scenario_set", prov.scenario_set}}}};
}

inline VaccinePolicy policy_from_json(const nlohmann::json& j) {
  const auto V = j.at("V").get<std::vector<std::vector<double>>>();
  auto v = VaccinePolicy::zero(V.size(), j.at("window").at(0).get<int>(), j.at("window").at(1).get<int>());
  for (std::size_t k = 0; k < V.size(); ++k) {
    if (V[k].size() != v.width()) throw StructuralError("policy: row length differs from window width");
    for (std::size_t i = 0; i < V[k].size(); ++i) v.at(k, i) = V[k][i];
  }
  return v;
}

inline io::CsvTable trace_table(const std::vector<TraceRow>& trace) {
  io::CsvTable t;
  t.header = {"generation", "best_feasible_objective", "best_violation", "mean_objective"};
  for (const auto& r : trace)
    t.rows.push_back({static_cast<double>(r.generation), r.best_feasible_objective, r.best_violation, r.mean_objective});
  return t;
}

}  // namespace epialloc::alloc
