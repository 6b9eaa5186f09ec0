#pragma once

#include <json.hpp>

#include "epialloc/gp/kernel.hpp"
#include "epialloc/gp/sampler.hpp"

namespace epialloc::gp {

inline nlohmann::json to_json(const GpHyperParams& hp) {
  nlohmann::json states = nlohmann::json::object();
  for (std::size_t s = 0; s < hp.states.size(); ++s) {
    const auto& h = hp.per_state[s];
    states[hp.states[s]] = {{"sigma_f", h.sigma_f}, {"length_scale", h.length_scale}, {"sigma_obs", h.sigma_obs},
                            {"lambda", hp.lambda[s]}};
  }
  return {{"states", states}, {"order", hp.states}};
}

inline GpHyperParams hyperparams_from_json(const nlohmann::json& j) {
  GpHyperParams hp;
  hp.states = j.at("order").get<std::vector<std::string>>();
  for (const auto& name : hp.states) {
    const auto& s = j.at("states").at(name);
    hp.per_state.push_back({s.at("sigma_f").get<double>(), s.at("length_scale").get<double>(),
                            s.at("sigma_obs").get<double>()});
    hp.lambda.push_back(s.at("lambda").get<double>());
  }
  hp.validate();
  return hp;
}

inline nlohmann::json to_json(const PosteriorChain& c, bool with_latent = false) {
  nlohmann::json bounds = nlohmann::json::array();
  for (const auto& b : c.bounds) bounds.push_back({b.lo, b.hi});
  nlohmann::json j{{"model", c.model},
                   {"param_names", c.param_names},
                   {"bounds", bounds},
                   {"seed", c.seed},
                   {"iterations", c.iterations},
                   {"burn_in", c.burn_in},
                   {"acceptance", {{"theta", c.acceptance_theta}, {"latent", c.acceptance_latent}}},
                   {"samples", c.samples}};
  if (with_latent && !c.latent.empty()) j["latent"] = c.latent;
  return j;
}

inline PosteriorChain chain_from_json(const nlohmann::json& j) {
  PosteriorChain c;
  c.model = j.at("model").get<std::string>();
  c.param_names = j.at("param_names").get<std::vector<std::string>>();
  for (const auto& b : j.at("bounds")) c.bounds.push_back({b.at(0).get<double>(), b.at(1).get<double>()});
  c.seed = j.at("seed").get<std::uint64_t>();
  c.iterations = j.at("iterations").get<std::size_t>();
  c.burn_in = j.at("burn_in").get<std::size_t>();
  c.acceptance_theta = j.at("acceptance").at("theta").get<double>();
  c.acceptance_latent = j.at("acceptance").at("latent").get<double>();
  c.samples = j.at("samples").get<std::vector<ParamVector>>();
  if (j.contains("latent")) c.latent = j.at("latent").get<std::vector<std::vector<double>>>();
  for (const auto& s : c.samples)
    if (s.size() != c.param_names.size()) throw StructuralError("chain: sample width differs from parameter count");
  return c;
}

}  // namespace epialloc::gp
