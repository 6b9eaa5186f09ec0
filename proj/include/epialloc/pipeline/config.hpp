#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "epialloc/alloc/ga.hpp"
#include "epialloc/core/error.hpp"
#include "epialloc/core/seed.hpp"
#include "epialloc/gp/density.hpp"
#include "epialloc/gp/sampler.hpp"
#include "epialloc/scenario/reduce.hpp"

namespace epialloc::pipeline {

using nlohmann::json;

/// Invalid configuration; `path()` names the offending field.
class ConfigError : public Error {
 public:
  ConfigError(std::string path, const std::string& what) : Error(path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

/// An upstream stage has not produced the artifact a stage needs.
class MissingArtifact : public Error {
 public:
  MissingArtifact(std::string stage, const std::string& file)
      : Error("missing artifact " + file + " (run stage '" + stage + "' first)"), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

namespace detail {

inline const json& at(const json& j, const std::string& key, const std::string& path) {
  if (!j.is_object() || !j.contains(key)) throw ConfigError(path + "." + key, "required field missing");
  return j.at(key);
}

template <typename T>
T get(const json& j, const std::string& key, const std::string& path) {
  const auto& v = at(j, key, path);
  try {
    return v.get<T>();
  } catch (const json::exception&) {
    throw ConfigError(path + "." + key, "wrong type");
  }
}

template <typename T>
T get_or(const json& j, const std::string& key, const std::string& path, T fallback) {
  if (!j.is_object() || !j.contains(key)) return fallback;
  return get<T>(j, key, path);
}

inline void require(bool ok, const std::string& path, const std::string& what) {
  if (!ok) throw ConfigError(path, what);
}

}  // namespace detail

struct InferenceConfig {
  ModelSpec model = ModelSpec::make(ModelKind::SEIR);
  double population = 1000.0;
  double infected = 10.0;
  ParamVector truth;
  double sigma = 0.1;
  int days = 15;
  double lambda = 1e-2;
  gp::DensityOptions density;
  gp::SamplerConfig sampler;
  std::size_t nlls_starts = 8;
};

struct ScenarioConfig {
  std::size_t k = 25;
  scenario::ReduceConfig reduce;
  std::vector<std::vector<double>> onset_grid;
};

struct AllocationConfig {
  ModelSpec model = ModelSpec::make(ModelKind::SEIRM);
  PopulationConfig population;
  std::vector<double> infected;
  alloc::ObjectiveSpec objective;
  alloc::BudgetConfig budgets;
  alloc::GaConfig ga;
};

struct ExperimentConfig {
  json raw;  // effective document after overrides
  std::string output_dir = "out";
  std::uint64_t master_seed = 1;
  std::size_t threads = 0;
  InferenceConfig inference;
  ScenarioConfig scenarios;
  AllocationConfig allocation;

  /// Fingerprint of everything that influences artifacts (output location and thread count excluded).
  std::uint64_t hash() const {
    json j = raw;
    j.erase("output_dir");
    j.erase("threads");
    return fnv1a(j.dump());
  }

  std::string hash_hex() const {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash()));
    return buf;
  }

  std::uint64_t stage_seed(std::string_view stage) const { return derive_seed(master_seed, stage); }
};

/// Assigns `value` (parsed as JSON, or taken as a string if that fails) at a dotted path.
inline void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError(assignment, "override must look like key.path=value");
  const std::string key = assignment.substr(0, eq), text = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(text);
  } catch (const json::exception&) {
    value = text;
  }
  json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ConfigError(key, "empty path component");
    if (dot == std::string::npos) {
      (*node)[part] = value;
      break;
    }
    node = &(*node)[part];
    start = dot + 1;
  }
}

inline ModelSpec parse_model(const json& j, const std::string& key, const std::string& path) {
  const auto name = detail::get<std::string>(j, key, path);
  try {
    return ModelSpec::make(parse_model_kind(name));
  } catch (const Error&) {
    throw ConfigError(path + "." + key, "unknown model '" + name + "'");
  }
}

inline ParamVector parse_params(const json& j, const ModelSpec& model, const std::string& path) {
  ParamVector out;
  for (std::size_t p = 0; p < model.n_params(); ++p) {
    const double v = detail::get<double>(j, model.param_names[p], path);
    detail::require(model.param_bounds[p].contains(v), path + "." + model.param_names[p], "outside parameter bounds");
    out.push_back(v);
  }
  return out;
}

inline ExperimentConfig parse_config(const json& doc) {
  using namespace detail;
  ExperimentConfig c;
  c.raw = doc;
  require(doc.is_object(), "$", "configuration must be a JSON object");
  c.output_dir = get_or<std::string>(doc, "output_dir", "$", "out");
  c.master_seed = get_or<std::uint64_t>(doc, "master_seed", "$", 1);
  c.threads = get_or<std::size_t>(doc, "threads", "$", 0);

  // inference
  {
    const std::string P = "inference";
    const auto& j = at(doc, "inference", "$");
    auto& inf = c.inference;
    inf.model = parse_model(j, "model", P);
    require(!inf.model.has_vaccination(), P + ".model", "inference uses a model without vaccination");
    inf.population = get_or<double>(j, "population", P, 1000.0);
    require(inf.population > 0, P + ".population", "must be positive");
    inf.infected = get_or<double>(j, "infected", P, 10.0);
    require(inf.infected >= 0 && inf.infected <= inf.population, P + ".infected", "must lie in [0, population]");
    inf.truth = parse_params(at(j, "truth", P), inf.model, P + ".truth");
    inf.sigma = get_or<double>(j, "sigma", P, 0.1);
    require(inf.sigma >= 0, P + ".sigma", "must be >= 0");
    inf.days = get_or<int>(j, "days", P, 15);
    require(inf.days >= 3, P + ".days", "at least 3 observation days required");
    const json gpj = j.value("gp", json::object());
    inf.lambda = get_or<double>(gpj, "lambda", P + ".gp", 1e-2);
    require(inf.lambda > 0, P + ".gp.lambda", "must be positive");
    inf.density.c_jitter = get_or<double>(gpj, "c_jitter", P + ".gp", 1e-6);
    require(inf.density.c_jitter >= 0, P + ".gp.c_jitter", "must be >= 0");
    const json mc = j.value("mcmc", json::object());
    const std::string M = P + ".mcmc";
    inf.sampler.iterations = get_or<std::size_t>(mc, "iterations", M, 50'000);
    inf.sampler.burn_in = get_or<std::size_t>(mc, "burn_in", M, 5'000);
    inf.sampler.theta_step = get_or<double>(mc, "theta_step", M, 0.02);
    inf.sampler.latent_step = get_or<double>(mc, "latent_step", M, 1.0);
    inf.sampler.adapt = get_or<bool>(mc, "adapt", M, true);
    inf.sampler.store_latent = get_or<bool>(mc, "store_latent", M, false);
    require(inf.sampler.iterations >= inf.sampler.burn_in, M + ".iterations", "must be >= burn_in");
    require(inf.sampler.theta_step > 0 && inf.sampler.latent_step > 0, M, "step sizes must be positive");
    inf.nlls_starts = get_or<std::size_t>(j.value("nlls", json::object()), "starts", P + ".nlls", 8);
    require(inf.nlls_starts > 0, P + ".nlls.starts", "must be positive");
  }

  // scenarios
  {
    const std::string P = "scenarios";
    const auto& j = at(doc, "scenarios", "$");
    auto& s = c.scenarios;
    s.k = get<std::size_t>(j, "k", P);
    require(s.k > 0, P + ".k", "must be positive");
    s.reduce.restarts = get_or<std::size_t>(j, "restarts", P, 10);
    s.reduce.max_iterations = get_or<std::size_t>(j, "max_iterations", P, 300);
    s.reduce.standardize = get_or<bool>(j, "standardize", P, false);
    require(s.reduce.restarts > 0 && s.reduce.max_iterations > 0, P + ".restarts", "must be positive");
    s.onset_grid = get<std::vector<std::vector<double>>>(j, "onset_grid", P);
    for (std::size_t k = 0; k < s.onset_grid.size(); ++k)
      require(!s.onset_grid[k].empty(), P + ".onset_grid[" + std::to_string(k) + "]", "empty onset list");
  }

  // allocation
  {
    const std::string P = "allocation";
    const auto& j = at(doc, "allocation", "$");
    auto& a = c.allocation;
    a.model = parse_model(j, "model", P);
    require(a.model.param_names == c.inference.model.param_names, P + ".model",
            "parameters must match the inference model");
    const auto& subs = at(j, "subpopulations", P);
    require(subs.is_array() && !subs.empty(), P + ".subpopulations", "non-empty array required");
    auto& pop = a.population;
    for (std::size_t k = 0; k < subs.size(); ++k) {
      const std::string S = P + ".subpopulations[" + std::to_string(k) + "]";
      pop.names.push_back(get<std::string>(subs[k], "name", S));
      pop.N.push_back(get<double>(subs[k], "N", S));
      require(pop.N.back() > 0, S + ".N", "must be positive");
      pop.onset_c1.push_back(get<double>(subs[k], "c1", S));
      pop.onset_c2.push_back(get<double>(subs[k], "c2", S));
      a.infected.push_back(get_or<double>(subs[k], "infected", S, 100.0));
      require(a.infected.back() >= 0 && a.infected.back() <= pop.N.back(), S + ".infected", "must lie in [0, N]");
    }
    const std::size_t K = pop.N.size();
    const auto mob = get<std::vector<std::vector<double>>>(j, "mobility", P);
    require(mob.size() == K, P + ".mobility", "must be K x K");
    for (std::size_t r = 0; r < K; ++r) {
      const std::string R = P + ".mobility[" + std::to_string(r) + "]";
      require(mob[r].size() == K, R, "must have K entries");
      for (std::size_t k = 0; k < K; ++k) {
        require(mob[r][k] >= 0, R, "entries must be >= 0");
        require(r != k || mob[r][k] == 1.0, R, "diagonal must equal 1");
        pop.mobility.push_back(mob[r][k]);
      }
    }
    pop.eta = get<double>(j, "eta", P);
    require(pop.eta >= 0 && pop.eta <= 1, P + ".eta", "must lie in [0,1]");
    a.objective.target = get_or<std::string>(j, "target", P, "I");
    require(a.model.state_index(a.objective.target).has_value(), P + ".target", "model has no such state");
    a.objective.horizon = get<int>(j, "horizon", P);
    require(a.objective.horizon > 0, P + ".horizon", "must be positive");
    const auto window = get<std::vector<int>>(j, "window", P);
    require(window.size() == 2 && 0 <= window[0] && window[0] <= window[1] && window[1] <= a.objective.horizon,
            P + ".window", "must be [t_start, t_end] with 0 <= t_start <= t_end <= horizon");
    a.budgets.t_start = window[0];
    a.budgets.t_end = window[1];
    a.budgets.daily_budget = get<double>(j, "daily_budget", P);
    require(a.budgets.daily_budget >= 0, P + ".daily_budget", "must be >= 0");
    const auto& cap = at(j, "daily_cap", P);
    if (cap.is_number())
      a.budgets.daily_cap.assign(K, cap.get<double>());
    else
      a.budgets.daily_cap = get<std::vector<double>>(j, "daily_cap", P);
    require(a.budgets.daily_cap.size() == K, P + ".daily_cap", "one cap per subpopulation");
    for (double u : a.budgets.daily_cap) require(u >= 0, P + ".daily_cap", "caps must be >= 0");
    const json gaj = j.value("ga", json::object());
    const std::string G = P + ".ga";
    a.ga.population = get_or<std::size_t>(gaj, "population", G, 100);
    a.ga.generations = get_or<std::size_t>(gaj, "generations", G, 200);
    a.ga.p_crossover = get_or<double>(gaj, "p_crossover", G, 0.9);
    a.ga.p_mutation = get_or<double>(gaj, "p_mutation", G, 0.5);
    a.ga.eta_c = get_or<double>(gaj, "eta_c", G, 10.0);
    a.ga.eta_m = get_or<double>(gaj, "eta_m", G, 10.0);
    require(a.ga.population > 0 && a.ga.population % 2 == 0, G + ".population", "must be even and positive");
    require(a.ga.p_crossover >= 0 && a.ga.p_crossover <= 1, G + ".p_crossover", "must lie in [0,1]");
    require(a.ga.p_mutation >= 0 && a.ga.p_mutation <= 1, G + ".p_mutation", "must lie in [0,1]");
    require(a.ga.eta_c > 0 && a.ga.eta_m > 0, G, "distribution indices must be positive");
    require(c.scenarios.onset_grid.size() == K, "scenarios.onset_grid", "one onset list per subpopulation");
  }
  return c;
}

inline json load_json_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError(path, "cannot open configuration file");
  try {
    return json::parse(is);
  } catch (const json::exception& e) {
    throw ConfigError(path, std::string("invalid JSON: ") + e.what());
  }
}

}  // namespace epialloc::pipeline
