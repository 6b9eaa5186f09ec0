#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "epialloc/alloc/io.hpp"
#include "epialloc/gp/fit.hpp"
#include "epialloc/gp/io.hpp"
#include "epialloc/gp/nlls.hpp"
#include "epialloc/ode/io.hpp"
#include "epialloc/pipeline/config.hpp"
#include "epialloc/scenario/set.hpp"

namespace epialloc::pipeline {

namespace fs = std::filesystem;

/// Artifact store rooted at the configured output directory. Every write
/// is recorded in `<outdir>/manifest.json` under its stage.
class Workspace {
 public:
  explicit Workspace(const ExperimentConfig& cfg) : cfg_(cfg), root_(cfg.output_dir) {}

  const ExperimentConfig& config() const { return cfg_; }
  fs::path path(const std::string& stage, const std::string& file) const { return root_ / stage / file; }

  std::size_t workers() const { return cfg_.threads > 0 ? cfg_.threads : default_workers(); }

  json provenance(const std::string& stage) const {
    return {{"stage", stage}, {"config_hash", cfg_.hash_hex()}, {"seed", cfg_.stage_seed(stage)}};
  }

  void write_json(const std::string& stage, const std::string& file, json doc) {
    doc["provenance"] = provenance(stage);
    std::ofstream os(prepare(stage, file), std::ios::binary);
    os << doc.dump(2) << '\n';
    record(stage, file);
  }

  void write_csv(const std::string& stage, const std::string& file, const io::CsvTable& t) {
    io::save_csv(prepare(stage, file).string(), t);
    record(stage, file);
  }

  json read_json(const std::string& stage, const std::string& file) const {
    const auto p = require(stage, file);
    std::ifstream is(p);
    try {
      return json::parse(is);
    } catch (const json::exception& e) {
      throw StructuralError("corrupt artifact " + p.string() + ": " + e.what());
    }
  }

  io::CsvTable read_csv(const std::string& stage, const std::string& file) const {
    return io::load_csv(require(stage, file).string());
  }

  /// A user-supplied file: taken as given if it exists, else relative to the output directory.
  fs::path locate(const std::string& stage, const std::string& file) const {
    if (fs::exists(file)) return file;
    const auto inside = root_ / file;
    if (fs::path(file).is_relative() && fs::exists(inside)) return inside;
    throw MissingArtifact(stage, file);
  }

  fs::path require(const std::string& stage, const std::string& file) const {
    const auto p = path(stage, file);
    if (!fs::exists(p)) throw MissingArtifact(stage, p.string());
    return p;
  }

 private:
  fs::path prepare(const std::string& stage, const std::string& file) const {
    fs::create_directories(root_ / stage);
    return path(stage, file);
  }

  void record(const std::string& stage, const std::string& file) {
    const auto mpath = root_ / "manifest.json";
    json m = json::object();
    if (fs::exists(mpath)) {
      std::ifstream is(mpath);
      m = json::parse(is, nullptr, false);
      if (m.is_discarded() || !m.is_object()) m = json::object();
    }
    m["config_hash"] = cfg_.hash_hex();
    m["master_seed"] = cfg_.master_seed;
    auto& entry = m["stages"][stage];
    entry["seed"] = cfg_.stage_seed(stage);
    auto& files = entry["artifacts"];
    const std::string rel = stage + "/" + file;
    if (!files.is_array()) files = json::array();
    if (std::find(files.begin(), files.end(), rel) == files.end()) files.push_back(rel);
    std::sort(files.begin(), files.end());
    std::ofstream os(mpath, std::ios::binary);
    os << m.dump(2) << '\n';
  }

  ExperimentConfig cfg_;
  fs::path root_;
};

namespace detail {

inline PopulationConfig inference_population(const ExperimentConfig& c) {
  return PopulationConfig::single(c.inference.population);
}

inline StateVector inference_initial_state(const ExperimentConfig& c) {
  return default_initial_state(c.inference.model, inference_population(c), c.inference.infected);
}

inline StateVector allocation_initial_state(const ExperimentConfig& c) {
  const auto& a = c.allocation;
  const std::size_t nc = a.model.n_states(), i_idx = *a.model.state_index("I");
  StateVector x(nc * a.population.K(), 0.0);
  for (std::size_t k = 0; k < a.population.K(); ++k) {
    x[k * nc + i_idx] = a.infected[k];
    x[k * nc] = a.population.N[k] - a.infected[k];
  }
  return x;
}

inline json param_map(const std::vector<std::string>& names, std::span<const double> theta) {
  json j = json::object();
  for (std::size_t i = 0; i < names.size(); ++i) j[names[i]] = theta[i];
  return j;
}

inline scenario::ScenarioSet load_scenarios(const Workspace& ws, const std::string& stage, const std::string& file) {
  return scenario::scenario_set_from_json(ws.read_json(stage, file));
}

inline scenario::ScenarioSet load_scenarios_file(const Workspace& ws, const std::string& file) {
  std::ifstream is(ws.locate("augment", file));
  return scenario::scenario_set_from_json(json::parse(is));
}

inline alloc::PolicyEvaluator make_evaluator(const Workspace& ws, scenario::ScenarioSet set) {
  const auto& a = ws.config().allocation;
  return alloc::PolicyEvaluator(a.model, a.population, allocation_initial_state(ws.config()), std::move(set),
                                a.objective, a.budgets, ws.workers());
}

inline std::vector<std::string> allocation_labels(const ExperimentConfig& c) {
  std::vector<std::string> out;
  for (std::size_t k = 0; k < c.allocation.population.K(); ++k)
    for (const auto& s : c.allocation.model.state_names) out.push_back(c.allocation.population.name(k) + "_" + s);
  return out;
}

}  // namespace detail

/// Truth trajectory of the inference model plus the allocation model under
/// the zero policy at the true parameters and nominal onsets.
inline void run_simulate(Workspace& ws) {
  const auto& c = ws.config();
  const auto& inf = c.inference;
  const auto pop = detail::inference_population(c);
  const auto traj = simulate(inf.model, pop, inf.truth, detail::inference_initial_state(c), day_grid(inf.days));
  ws.write_csv("simulate", "truth.csv", trajectory_table(traj, gp::state_labels(inf.model, pop)));

  const auto& a = c.allocation;
  auto truth_set = scenario::point_set(a.model.param_names, inf.truth, a.population.onset_c2);
  truth_set.source_chain = "truth";
  auto eval = detail::make_evaluator(ws, truth_set);
  const auto zero = VaccinePolicy::zero(a.population.K(), a.budgets.t_start, a.budgets.t_end);
  const auto full = eval.trajectory(zero, 0);
  ws.write_csv("simulate", "allocation_truth.csv", trajectory_table(full, detail::allocation_labels(c)));
  ws.write_json("simulate", "truth_scenario.json", scenario::to_json(truth_set));
  ws.write_json("simulate", "summary.json",
                {{"truth", detail::param_map(inf.model.param_names, inf.truth)},
                 {"target", a.objective.target},
                 {"zero_policy_peak", eval.evaluate(zero).objective}});
}

inline void run_synth(Workspace& ws) {
  const auto& c = ws.config();
  const auto traj = trajectory_from_table(ws.read_csv("simulate", "truth.csv"));
  const auto labels = gp::state_labels(c.inference.model, detail::inference_population(c));
  if (traj.dim != labels.size()) throw StructuralError("synth: truth trajectory does not match the inference model");
  const std::vector<double> sigma(traj.dim, c.inference.sigma);
  const auto seed = c.stage_seed("synth");
  const auto data = generate_noisy_observations(traj, sigma, seed, labels, 1.0);
  ws.write_csv("synth", "observations.csv", observations_table(data));
  ws.write_json("synth", "observations.json", observations_sidecar(data, seed, c.inference.model, c.inference.truth));
}

inline TimeSeriesData load_observations(const Workspace& ws) {
  return observations_from_table(ws.read_csv("synth", "observations.csv"), ws.read_json("synth", "observations.json"));
}

inline void run_fit_gp(Workspace& ws) {
  const auto data = load_observations(ws);
  const auto hp = gp::fit_gp_hyperparams(data, {.lambda = ws.config().inference.lambda});
  ws.write_json("fit-gp", "hyperparams.json", gp::to_json(hp));
}

inline void run_fit_nlls(Workspace& ws) {
  const auto& c = ws.config();
  const auto data = load_observations(ws);
  gp::NllsOptions opts;
  opts.starts = c.inference.nlls_starts;
  opts.seed = c.stage_seed("fit-nlls");
  const auto r = gp::nlls_fit(data, c.inference.model, detail::inference_population(c),
                              detail::inference_initial_state(c), 0.0, opts);
  ws.write_json("fit-nlls", "estimate.json",
                {{"theta", detail::param_map(c.inference.model.param_names, r.theta)}, {"residual", r.residual}});
}

inline void run_sample(Workspace& ws) {
  const auto& c = ws.config();
  const auto data = load_observations(ws);
  const auto hp = gp::hyperparams_from_json(ws.read_json("fit-gp", "hyperparams.json"));
  auto cfg = c.inference.sampler;
  cfg.seed = c.stage_seed("sample");
  const auto chain =
      gp::mh_sample(data, c.inference.model, detail::inference_population(c), hp, cfg, c.inference.density);
  ws.write_json("sample", "chain.json", gp::to_json(chain, cfg.store_latent));
}

inline void run_reduce(Workspace& ws) {
  const auto& c = ws.config();
  const auto chain = gp::chain_from_json(ws.read_json("sample", "chain.json"));
  if (chain.samples.empty()) throw DomainError("reduce: chain holds no retained samples");
  auto rc = c.scenarios.reduce;
  rc.seed = c.stage_seed("reduce");
  rc.workers = ws.workers();
  const auto k = std::min(c.scenarios.k, chain.samples.size());
  const auto red = scenario::reduce_scenarios(chain.samples, k, rc);
  auto set = scenario::from_reduction(red, chain.param_names);
  set.source_chain = "sample/chain.json";
  set.seed = rc.seed;
  json doc = scenario::to_json(set);
  doc["within_cluster_cost"] = red.cost;
  ws.write_json("reduce", "scenarios.json", doc);
  const auto mode = scenario::distribution_mode(chain.samples);
  ws.write_json("reduce", "nominal.json", {{"theta", detail::param_map(chain.param_names, mode)}, {"vector", mode}});
}

inline void run_augment(Workspace& ws) {
  const auto& c = ws.config();
  const auto base = detail::load_scenarios(ws, "reduce", "scenarios.json");
  auto set = scenario::augment_onset(base, c.scenarios.onset_grid);
  set.source_chain = "reduce/scenarios.json";
  ws.write_json("augment", "scenarios.json", scenario::to_json(set));
}

/// mode is "nominal" (single scenario at the chain mode) or "stochastic" (the augmented set).
inline void run_optimize(Workspace& ws, const std::string& mode) {
  const auto& c = ws.config();
  const auto& a = c.allocation;
  scenario::ScenarioSet set;
  std::string ref;
  if (mode == "nominal") {
    const auto nominal = ws.read_json("reduce", "nominal.json");
    set = scenario::point_set(a.model.param_names, nominal.at("vector").get<ParamVector>());
    ref = "reduce/nominal.json";
  } else if (mode == "stochastic") {
    set = detail::load_scenarios(ws, "augment", "scenarios.json");
    ref = "augment/scenarios.json";
  } else {
    throw ConfigError("--mode", "must be nominal or stochastic");
  }
  auto ga = a.ga;
  ga.seed = c.stage_seed("optimize");  // shared by both modes
  const auto eval = detail::make_evaluator(ws, std::move(set));
  const auto res = alloc::ga_optimize(eval, ga);
  ws.write_json("optimize", mode + "_policy.json",
                alloc::to_json(res.policy, a.population.names, {mode, ga.seed, ga, ref}));
  ws.write_csv("optimize", mode + "_trace.csv", alloc::trace_table(res.trace));
}

inline VaccinePolicy load_policy(const Workspace& ws, const std::string& spec) {
  const auto& b = ws.config().allocation.budgets;
  if (spec == "zero") return VaccinePolicy::zero(b.daily_cap.size(), b.t_start, b.t_end);
  std::ifstream is(ws.locate("optimize", spec));
  return alloc::policy_from_json(json::parse(is));
}

inline json evaluation_json(const alloc::EvaluationResult& r, const scenario::ScenarioSet& set) {
  std::vector<double> p;
  for (const auto& s : set.scenarios) p.push_back(s.p);
  return {{"objective", r.objective}, {"violation", r.violation}, {"peaks", r.peaks}, {"probabilities", p}};
}

/// Scores a policy ("zero" or a policy file) on a scenario file (default: the augmented set).
inline void run_evaluate(Workspace& ws, const std::string& policy_spec, const std::string& scenarios_file = {}) {
  const auto set = scenarios_file.empty() ? detail::load_scenarios(ws, "augment", "scenarios.json")
                                          : detail::load_scenarios_file(ws, scenarios_file);
  const auto policy = load_policy(ws, policy_spec);
  const auto eval = detail::make_evaluator(ws, set);
  const auto r = eval.evaluate(policy);
  std::string name = policy_spec == "zero" ? "zero" : fs::path(policy_spec).stem().string();
  if (!scenarios_file.empty()) name += "_on_" + fs::path(scenarios_file).stem().string();
  json doc = evaluation_json(r, set);
  doc["policy"] = policy_spec == "zero" ? "zero" : fs::path(policy_spec).filename().string();
  doc["scenarios"] = scenarios_file.empty() ? "augment/scenarios.json" : fs::path(scenarios_file).filename().string();
  ws.write_json("evaluate", name + ".json", doc);
}

/// Figure tables: expected total and per-subpopulation curves under the
/// zero, nominal and stochastic policies, plus a summary with the VSS.
inline void run_report(Workspace& ws) {
  const auto& c = ws.config();
  const auto& a = c.allocation;
  const auto set = detail::load_scenarios(ws, "augment", "scenarios.json");
  const auto eval = detail::make_evaluator(ws, set);
  const std::vector<std::string> names{"zero", "nominal", "stochastic"};
  std::vector<VaccinePolicy> policies{load_policy(ws, "zero"),
                                      load_policy(ws, ws.require("optimize", "nominal_policy.json").string()),
                                      load_policy(ws, ws.require("optimize", "stochastic_policy.json").string())};
  const auto results = eval.evaluate_batch(policies);
  std::vector<Trajectory> mean;
  for (const auto& p : policies) mean.push_back(eval.expected_trajectory(p));

  const std::size_t K = a.population.K(), nc = a.model.n_states();
  const auto& grid = eval.grid();
  auto series_table = [&](const std::string& state, bool per_subpop) {
    io::CsvTable t;
    t.header.push_back("t");
    const std::size_t s = *a.model.state_index(state);
    for (const auto& n : names) {
      if (per_subpop)
        for (std::size_t k = 0; k < K; ++k) t.header.push_back(n + "_" + a.population.name(k));
      else
        t.header.push_back(n);
    }
    for (std::size_t i = 0; i < grid.size(); ++i) {
      std::vector<double> row{grid[i]};
      for (const auto& m : mean) {
        double total = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
          if (per_subpop) row.push_back(m.at(i, k * nc + s));
          total += m.at(i, k * nc + s);
        }
        if (!per_subpop) row.push_back(total);
      }
      t.rows.push_back(std::move(row));
    }
    return t;
  };
  ws.write_csv("report", "total_" + a.objective.target + ".csv", series_table(a.objective.target, false));
  ws.write_csv("report", "subpop_I.csv", series_table("I", true));
  if (a.model.state_index("M")) ws.write_csv("report", "subpop_M.csv", series_table("M", true));
  if (a.model.state_index("H")) ws.write_csv("report", "subpop_H.csv", series_table("H", true));

  io::CsvTable summary;
  summary.header = {"policy", "expected_peak", "violation", "reduction_vs_zero", "improvement_vs_nominal"};
  json evals = json::object();
  for (std::size_t i = 0; i < names.size(); ++i) {
    const double obj = results[i].objective;
    summary.labels.push_back(names[i]);
    summary.rows.push_back({obj, results[i].violation, 1.0 - obj / results[0].objective,
                            1.0 - obj / results[1].objective});
    evals[names[i]] = evaluation_json(results[i], set);
  }
  ws.write_csv("report", "summary.csv", summary);
  ws.write_json("report", "evaluations.json", {{"policies", names}, {"evaluations", evals}});
}

inline const std::vector<std::string>& stage_order() {
  static const std::vector<std::string> order{"simulate", "synth",  "fit-gp",   "fit-nlls", "sample",
                                              "reduce",   "augment", "optimize", "report"};
  return order;
}

/// Every stage in order; optimize runs both modes.
inline void run_all(Workspace& ws) {
  run_simulate(ws);
  run_synth(ws);
  run_fit_gp(ws);
  run_fit_nlls(ws);
  run_sample(ws);
  run_reduce(ws);
  run_augment(ws);
  run_optimize(ws, "nominal");
  run_optimize(ws, "stochastic");
  run_report(ws);
}

}  // namespace epialloc::pipeline
