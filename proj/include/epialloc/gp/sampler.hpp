#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "epialloc/core/error.hpp"
#include "epialloc/gp/density.hpp"

namespace epialloc::gp {

struct SamplerConfig {
  std::size_t iterations = 50'000;
  std::size_t burn_in = 5'000;
  std::uint64_t seed = 1;
  double theta_step = 0.02;   // initial proposal sd, fraction of each bound width
  double latent_step = 1.0;   // initial proposal sd, in units of the state's sigma_obs
  bool adapt = true;          // tune step sizes during burn-in, frozen afterwards
  double target_acceptance = 0.25;
  std::size_t adapt_interval = 50;
  bool store_latent = false;
  std::vector<double> theta_init;  // empty: centre of the bound box

  void validate() const {
    if (iterations < burn_in) throw DomainError("sampler: iterations must be >= burn_in");
    if (!(theta_step > 0.0) || !(latent_step > 0.0)) throw DomainError("sampler: step sizes must be positive");
    if (adapt_interval == 0) throw DomainError("sampler: adapt_interval must be positive");
  }
};

/// Retained draws of a Metropolis-Hastings run.
struct PosteriorChain {
  std::string model;
  std::vector<std::string> param_names;
  std::vector<Interval> bounds;
  std::vector<ParamVector> samples;
  std::vector<std::vector<double>> latent;  // row-major states x times, only when requested
  std::size_t iterations = 0;
  std::size_t burn_in = 0;
  std::uint64_t seed = 0;
  double acceptance_theta = 0.0;   // post burn-in acceptance rate of the parameter block
  double acceptance_latent = 0.0;  // post burn-in acceptance rate of the latent-state block

  std::size_t size() const { return samples.size(); }
};

/// Metropolis-Hastings acceptance test for a log density ratio.
template <typename Rng>
bool mh_accept(double log_ratio, Rng& rng) {
  if (log_ratio >= 0.0) return true;
  if (!std::isfinite(log_ratio)) return false;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  return std::log(unif(rng)) < log_ratio;
}

/// Componentwise random-walk Metropolis-Hastings over (theta, X).
///
/// One iteration sweeps every parameter, then every latent entry, each with
/// its own Gaussian proposal. Proposals leaving the bound box are rejected.
/// During burn-in the proposal sd of every component is rescaled every
/// `adapt_interval` sweeps toward the target acceptance rate; the retained
/// part of the chain therefore uses fixed kernels.
inline PosteriorChain mh_sample(const FgpgmDensity& density, const SamplerConfig& cfg) {
  cfg.validate();
  const auto& sys = density.system();
  const std::size_t P = sys.param_names.size();
  const auto S = static_cast<Eigen::Index>(density.n_states());
  const Eigen::Index N = density.n_times();

  std::vector<double> theta = cfg.theta_init;
  if (theta.empty())
    for (const auto& b : sys.bounds) theta.push_back(b.mid());
  if (!sys.in_bounds(theta)) throw DomainError("sampler: initial parameters outside bounds");
  Eigen::MatrixXd X = density.posterior_mean();
  double logp = density(X, theta);
  if (!std::isfinite(logp)) throw NumericalError("sampler: initial point has zero density");

  std::vector<double> theta_sd(P);
  for (std::size_t p = 0; p < P; ++p) theta_sd[p] = cfg.theta_step * sys.bounds[p].width();
  Eigen::MatrixXd x_sd(S, N);
  for (Eigen::Index s = 0; s < S; ++s) x_sd.row(s).setConstant(cfg.latent_step * density.sigma(static_cast<std::size_t>(s)));

  std::vector<std::size_t> theta_hits(P, 0);
  Eigen::MatrixXi x_hits = Eigen::MatrixXi::Zero(S, N);

  PosteriorChain chain;
  chain.param_names = sys.param_names;
  chain.bounds = sys.bounds;
  chain.iterations = cfg.iterations;
  chain.burn_in = cfg.burn_in;
  chain.seed = cfg.seed;
  chain.samples.reserve(cfg.iterations - cfg.burn_in);

  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::size_t acc_theta = 0, acc_x = 0;

  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    const bool retained = it >= cfg.burn_in;

    for (std::size_t p = 0; p < P; ++p) {
      const double old = theta[p];
      theta[p] = old + theta_sd[p] * normal(rng);
      bool ok = false;
      if (sys.bounds[p].contains(theta[p])) {
        const double lp = density(X, theta);
        if (mh_accept(lp - logp, rng)) {
          logp = lp;
          ok = true;
        }
      }
      if (!ok) theta[p] = old;
      theta_hits[p] += ok;
      if (retained) acc_theta += ok;
    }

    for (Eigen::Index s = 0; s < S; ++s)
      for (Eigen::Index i = 0; i < N; ++i) {
        const double old = X(s, i);
        X(s, i) = old + x_sd(s, i) * normal(rng);
        const double lp = density(X, theta);
        const bool ok = mh_accept(lp - logp, rng);
        if (ok)
          logp = lp;
        else
          X(s, i) = old;
        x_hits(s, i) += ok;
        if (retained) acc_x += ok;
      }

    if (!retained && cfg.adapt && (it + 1) % cfg.adapt_interval == 0) {
      const double n = static_cast<double>(cfg.adapt_interval);
      for (std::size_t p = 0; p < P; ++p) {
        theta_sd[p] *= std::exp(2.0 * (static_cast<double>(theta_hits[p]) / n - cfg.target_acceptance));
        theta_sd[p] = std::clamp(theta_sd[p], 1e-12 * sys.bounds[p].width(), sys.bounds[p].width());
        theta_hits[p] = 0;
      }
      for (Eigen::Index s = 0; s < S; ++s)
        for (Eigen::Index i = 0; i < N; ++i) {
          x_sd(s, i) *= std::exp(2.0 * (static_cast<double>(x_hits(s, i)) / n - cfg.target_acceptance));
          x_hits(s, i) = 0;
        }
    }

    if (retained) {
      chain.samples.push_back(theta);
      if (cfg.store_latent) {
        std::vector<double> flat(static_cast<std::size_t>(S * N));
        for (Eigen::Index s = 0; s < S; ++s)
          for (Eigen::Index i = 0; i < N; ++i) flat[static_cast<std::size_t>(s * N + i)] = X(s, i);
        chain.latent.push_back(std::move(flat));
      }
    }
  }

  const double kept = static_cast<double>(cfg.iterations - cfg.burn_in);
  if (kept > 0) {
    chain.acceptance_theta = static_cast<double>(acc_theta) / (kept * static_cast<double>(P));
    chain.acceptance_latent = static_cast<double>(acc_x) / (kept * static_cast<double>(S * N));
  }
  return chain;
}

inline PosteriorChain mh_sample(const TimeSeriesData& data, const ModelSpec& model, const PopulationConfig& pop,
                                const GpHyperParams& hp, const SamplerConfig& cfg, const DensityOptions& opts = {}) {
  FgpgmDensity density(data, make_ode_system(model, pop), hp, opts);
  auto chain = mh_sample(density, cfg);
  chain.model = to_string(model.kind);
  return chain;
}

}  // namespace epialloc::gp
