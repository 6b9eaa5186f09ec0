#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "epialloc/core/error.hpp"
#include "epialloc/gp/kernel.hpp"
#include "epialloc/ode/model.hpp"
#include "epialloc/ode/observe.hpp"

namespace epialloc::gp {

/// An ODE right-hand side evaluated column-wise: X and F are (states x times).
using BatchRhs = std::function<void(const Eigen::MatrixXd& X, std::span<const double> times,
                                    std::span<const double> theta, Eigen::MatrixXd& F)>;

/// The ODE as seen by the inference code: labelled states, bounded parameters, and f.
struct OdeSystem {
  std::vector<std::string> state_names;
  std::vector<std::string> param_names;
  std::vector<Interval> bounds;
  BatchRhs f;

  bool in_bounds(std::span<const double> theta) const {
    if (theta.size() != bounds.size()) return false;
    for (std::size_t i = 0; i < theta.size(); ++i)
      if (!bounds[i].contains(theta[i])) return false;
    return true;
  }
};

/// Column labels for a flattened model state: plain compartment names for a
/// single population, "<subpop>_<state>" otherwise.
inline std::vector<std::string> state_labels(const ModelSpec& model, const PopulationConfig& pop) {
  std::vector<std::string> out;
  for (std::size_t k = 0; k < pop.K(); ++k)
    for (const auto& s : model.state_names) out.push_back(pop.K() == 1 ? s : pop.name(k) + "_" + s);
  return out;
}

/// Wraps a compartmental model as an OdeSystem (no vaccination applied).
inline OdeSystem make_ode_system(const ModelSpec& model, const PopulationConfig& pop) {
  OdeSystem sys;
  sys.state_names = state_labels(model, pop);
  sys.param_names = model.param_names;
  sys.bounds = model.param_bounds;
  sys.f = [model, pop](const Eigen::MatrixXd& X, std::span<const double> times, std::span<const double> theta,
                       Eigen::MatrixXd& F) {
    const auto m = epialloc::detail::compile(model, pop, theta);
    F.resize(X.rows(), X.cols());
    std::vector<double> x(static_cast<std::size_t>(X.rows())), dx(x.size());
    for (Eigen::Index i = 0; i < X.cols(); ++i) {
      for (Eigen::Index s = 0; s < X.rows(); ++s) x[static_cast<std::size_t>(s)] = X(s, i);
      epialloc::detail::rhs_into(m, x, times[static_cast<std::size_t>(i)], {}, dx);
      for (Eigen::Index s = 0; s < X.rows(); ++s) F(s, i) = dx[static_cast<std::size_t>(s)];
    }
  };
  return sys;
}

struct DensityOptions {
  // Diagonal nugget on each state's kernel matrix, relative to trace(C)/N.
  double c_jitter = 1e-6;
};

/// Log of the gradient-matching marginal p(X, theta | Y, phi, sigma, lambda)
/// up to an additive constant, split by factor.
struct DensityTerms {
  double prior = 0.0;  // log p(theta), uniform on the bound box
  double gp = 0.0;     // sum_k log N(x_k | mu_k, C_k)
  double obs = 0.0;    // sum_k log N(y_k | x_k, sigma_k^2 I)
  double ode = 0.0;    // sum_k log N(f_k(X, theta) | m_k, A_k + lambda_k I)

  double total() const { return prior + gp + obs + ode; }
};

/// Precomputes every theta-independent matrix so a density evaluation costs
/// O(states * N^2) plus one batch of ODE right-hand sides.
///
/// Each state series is centered by its empirical mean mu_k; the GP terms act
/// on x_k - mu_k while f sees the raw states. Latent matrices are laid out in
/// the system's state order (rows) by observation time (columns).
class FgpgmDensity {
 public:
  FgpgmDensity(const TimeSeriesData& data, OdeSystem system, const GpHyperParams& hp, const DensityOptions& opts = {})
      : system_(std::move(system)), times_(data.times) {
    data.validate();
    hp.validate();
    const std::size_t S = system_.state_names.size();
    n_ = static_cast<Eigen::Index>(data.n_times());
    if (data.n_times() < 2) throw DomainError("density: at least two observation times required");
    Y_.resize(static_cast<Eigen::Index>(S), n_);
    states_.resize(S);
    for (std::size_t s = 0; s < S; ++s) {
      const auto& name = system_.state_names[s];
      const auto row = find(data.state_names, name);
      const auto hrow = find(hp.states, name);
      if (!row || !hrow) throw StructuralError("density: state '" + name + "' missing from data or hyper-parameters");
      const auto& y = data.values[*row];
      for (Eigen::Index i = 0; i < n_; ++i) Y_(static_cast<Eigen::Index>(s), i) = y[static_cast<std::size_t>(i)];
      build_state(states_[s], y, hp.per_state[*hrow], hp.lambda[*hrow], opts);
    }
    log_prior_ = 0.0;
    for (const auto& b : system_.bounds) log_prior_ -= std::log(b.width() > 0 ? b.width() : 1.0);
  }

  std::size_t n_states() const { return states_.size(); }
  Eigen::Index n_times() const { return n_; }
  const OdeSystem& system() const { return system_; }
  const Eigen::MatrixXd& observations() const { return Y_; }

  /// Out-of-bounds theta yields -infinity in every term.
  DensityTerms terms(const Eigen::MatrixXd& X, std::span<const double> theta) const {
    if (X.rows() != static_cast<Eigen::Index>(states_.size()) || X.cols() != n_)
      throw StructuralError("density: latent matrix has the wrong shape");
    DensityTerms t;
    if (!system_.in_bounds(theta)) {
      const double ninf = -std::numeric_limits<double>::infinity();
      return {ninf, ninf, ninf, ninf};
    }
    t.prior = log_prior_;
    Eigen::MatrixXd F;
    system_.f(X, times_, theta, F);
    const double log2pi = std::log(2.0 * std::numbers::pi);
    for (std::size_t s = 0; s < states_.size(); ++s) {
      const auto& st = states_[s];
      const auto si = static_cast<Eigen::Index>(s);
      const Eigen::VectorXd xc = X.row(si).transpose().array() - st.mu;
      t.gp += -0.5 * xc.dot(st.c_inv * xc) - 0.5 * st.logdet_c - 0.5 * static_cast<double>(n_) * log2pi;
      const Eigen::VectorXd ry = Y_.row(si) - X.row(si);
      t.obs += -0.5 * ry.squaredNorm() / (st.sigma * st.sigma) - static_cast<double>(n_) * std::log(st.sigma) -
               0.5 * static_cast<double>(n_) * log2pi;
      const Eigen::VectorXd r = F.row(si).transpose() - st.d * xc;
      t.ode += -0.5 * r.dot(st.s_inv * r) - 0.5 * st.logdet_s - 0.5 * static_cast<double>(n_) * log2pi;
    }
    return t;
  }

  double operator()(const Eigen::MatrixXd& X, std::span<const double> theta) const { return terms(X, theta).total(); }

  /// GP posterior mean of the states given the data; the sampler's starting point.
  Eigen::MatrixXd posterior_mean() const {
    Eigen::MatrixXd X(Y_.rows(), n_);
    for (std::size_t s = 0; s < states_.size(); ++s) {
      const auto si = static_cast<Eigen::Index>(s);
      X.row(si) = (states_[s].smoother * (Y_.row(si).transpose().array() - states_[s].mu).matrix()).transpose();
      X.row(si).array() += states_[s].mu;
    }
    return X;
  }

  /// Scale of each state's observation noise (used for proposal widths).
  double sigma(std::size_t s) const { return states_[s].sigma; }

 private:
  struct StateBlock {
    double mu = 0.0;
    double sigma = 1.0;
    Eigen::MatrixXd c_inv;     // (C + jitter)^-1
    double logdet_c = 0.0;
    Eigen::MatrixXd d;         // Cov(x',x) C^-1
    Eigen::MatrixXd s_inv;     // (A + lambda I)^-1
    double logdet_s = 0.0;
    Eigen::MatrixXd smoother;  // C (C + sigma^2 I)^-1
  };

  static std::optional<std::size_t> find(const std::vector<std::string>& names, const std::string& name) {
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == name) return i;
    return std::nullopt;
  }

  static double logdet(const Eigen::LLT<Eigen::MatrixXd>& llt) {
    return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  }

  void build_state(StateBlock& st, const std::vector<double>& y, const StateHyperParams& hp, double lambda,
                   const DensityOptions& opts) const {
    st.mu = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
    st.sigma = hp.sigma_obs;
    const auto km = rbf_kernel_matrices(times_, hp);
    Eigen::MatrixXd C = km.C;
    C.diagonal().array() += opts.c_jitter * km.C.trace() / static_cast<double>(n_);
    Eigen::LLT<Eigen::MatrixXd> llt(C);
    if (llt.info() != Eigen::Success) throw NumericalError("density: kernel matrix not positive definite");
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n_, n_);
    st.c_inv = llt.solve(I);
    st.logdet_c = logdet(llt);
    st.d = llt.solve(km.d_first.transpose()).transpose();
    Eigen::MatrixXd A = km.dd - st.d * km.d_second;
    A = 0.5 * (A + A.transpose()).eval();
    A.diagonal().array() += 1e-10 * std::abs(A.trace()) / static_cast<double>(n_) + lambda;
    Eigen::LLT<Eigen::MatrixXd> lls(A);
    if (lls.info() != Eigen::Success) throw NumericalError("density: A + lambda I not positive definite");
    st.s_inv = lls.solve(I);
    st.logdet_s = logdet(lls);
    Eigen::MatrixXd Cn = km.C;
    Cn.diagonal().array() += hp.sigma_obs * hp.sigma_obs;
    st.smoother = Cn.llt().solve(km.C).transpose();  // C (C + s^2 I)^-1, both symmetric
  }

  OdeSystem system_;
  std::vector<double> times_;
  Eigen::Index n_ = 0;
  Eigen::MatrixXd Y_;
  std::vector<StateBlock> states_;
  double log_prior_ = 0.0;
};

/// One-shot evaluation; builds the precomputed context on every call.
inline double log_density(const Eigen::MatrixXd& X, std::span<const double> theta, const TimeSeriesData& data,
                          const GpHyperParams& hp, const ModelSpec& model, const PopulationConfig& pop,
                          const DensityOptions& opts = {}) {
  return FgpgmDensity(data, make_ode_system(model, pop), hp, opts)(X, theta);
}

}  // namespace epialloc::gp
