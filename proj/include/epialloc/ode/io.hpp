#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "epialloc/gp/density.hpp"
#include "epialloc/io/csv.hpp"
#include "epialloc/ode/integrate.hpp"
#include "epialloc/ode/observe.hpp"

namespace epialloc {

inline io::CsvTable trajectory_table(const Trajectory& traj, const std::vector<std::string>& labels) {
  if (labels.size() != traj.dim) throw StructuralError("trajectory csv: one label per column required");
  io::CsvTable t;
  t.header.push_back("t");
  t.header.insert(t.header.end(), labels.begin(), labels.end());
  for (std::size_t i = 0; i < traj.size(); ++i) {
    std::vector<double> r{traj.times[i]};
    const auto s = traj.state(i);
    r.insert(r.end(), s.begin(), s.end());
    t.rows.push_back(std::move(r));
  }
  return t;
}

inline Trajectory trajectory_from_table(const io::CsvTable& t) {
  if (t.header.empty() || t.header[0] != "t") throw StructuralError("trajectory csv: first column must be t");
  Trajectory traj;
  traj.dim = t.header.size() - 1;
  for (const auto& r : t.rows) {
    traj.times.push_back(r[0]);
    traj.values.insert(traj.values.end(), r.begin() + 1, r.end());
  }
  return traj;
}

inline io::CsvTable observations_table(const TimeSeriesData& data) {
  data.validate();
  io::CsvTable t;
  t.header.push_back("t");
  t.header.insert(t.header.end(), data.state_names.begin(), data.state_names.end());
  for (std::size_t i = 0; i < data.n_times(); ++i) {
    std::vector<double> r{data.times[i]};
    for (const auto& row : data.values) r.push_back(row[i]);
    t.rows.push_back(std::move(r));
  }
  return t;
}

/// Rebuilds observations from their CSV table and the sidecar document
/// (only its "sigma" entry is read).
inline TimeSeriesData observations_from_table(const io::CsvTable& t, const nlohmann::json& sidecar = {}) {
  if (t.header.empty() || t.header[0] != "t") throw StructuralError("observations csv: first column must be t");
  TimeSeriesData data;
  data.state_names.assign(t.header.begin() + 1, t.header.end());
  data.values.assign(data.state_names.size(), {});
  for (const auto& r : t.rows) {
    data.times.push_back(r[0]);
    for (std::size_t j = 1; j < r.size(); ++j) data.values[j - 1].push_back(r[j]);
  }
  if (sidecar.contains("sigma")) data.noise_sigma = sidecar.at("sigma").get<std::vector<double>>();
  data.validate();
  return data;
}

inline nlohmann::json observations_sidecar(const TimeSeriesData& data, std::uint64_t seed, const ModelSpec& model,
                                           std::span<const double> truth) {
  nlohmann::json j;
  j["seed"] = seed;
  j["states"] = data.state_names;
  j["sigma"] = data.noise_sigma;
  j["model"] = to_string(model.kind);
  nlohmann::json t = nlohmann::json::object();
  for (std::size_t p = 0; p < model.n_params() && p < truth.size(); ++p) t[model.param_names[p]] = truth[p];
  j["truth"] = t;
  return j;
}

}  // namespace epialloc
