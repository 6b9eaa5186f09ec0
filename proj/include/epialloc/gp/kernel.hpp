#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "epialloc/core/error.hpp"

namespace epialloc::gp {

/// Squared-exponential kernel hyper-parameters and observation noise of one state.
struct StateHyperParams {
  double sigma_f = 1.0;       // signal standard deviation
  double length_scale = 1.0;  // days
  double sigma_obs = 0.1;     // observation noise standard deviation

  void validate() const {
    if (!(sigma_f > 0.0) || !(length_scale > 0.0) || !(sigma_obs > 0.0))
      throw DomainError("gp: sigma_f, length_scale and sigma_obs must be positive");
  }
};

/// Hyper-parameters for every observed state plus the gradient-mismatch variance lambda.
struct GpHyperParams {
  std::vector<std::string> states;
  std::vector<StateHyperParams> per_state;
  std::vector<double> lambda;

  void validate() const {
    if (states.size() != per_state.size() || states.size() != lambda.size())
      throw StructuralError("gp: states, per_state and lambda must have equal length");
    for (const auto& h : per_state) h.validate();
    for (double l : lambda)
      if (!(l > 0.0)) throw DomainError("gp: lambda must be positive");
  }
};

/// Kernel blocks over one time grid.
///   C(i,j)       = k(t_i, t_j)
///   d_first(i,j) = dk/dt  (t_i, t_j) = Cov(x'(t_i), x(t_j))
///   d_second(i,j)= dk/dt' (t_i, t_j) = Cov(x(t_i), x'(t_j)) = d_first^T
///   dd(i,j)      = d2k/dt dt'         = Cov(x'(t_i), x'(t_j))
struct KernelMatrices {
  Eigen::MatrixXd C;
  Eigen::MatrixXd d_first;
  Eigen::MatrixXd d_second;
  Eigen::MatrixXd dd;
};

inline void check_times(std::span<const double> times) {
  for (std::size_t i = 1; i < times.size(); ++i)
    if (!(times[i] > times[i - 1])) throw DomainError("gp: observation times must be strictly increasing");
}

inline KernelMatrices rbf_kernel_matrices(std::span<const double> times, const StateHyperParams& hp) {
  if (!(hp.length_scale > 0.0)) throw DomainError("gp: length scale must be positive");
  check_times(times);
  const auto n = static_cast<Eigen::Index>(times.size());
  const double s2 = hp.sigma_f * hp.sigma_f;
  const double l2 = hp.length_scale * hp.length_scale;
  KernelMatrices km{Eigen::MatrixXd(n, n), Eigen::MatrixXd(n, n), Eigen::MatrixXd(n, n), Eigen::MatrixXd(n, n)};
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      const double d = times[i] - times[j];
      const double c = s2 * std::exp(-0.5 * d * d / l2);
      km.C(i, j) = c;
      km.d_first(i, j) = -d / l2 * c;
      km.d_second(i, j) = d / l2 * c;
      km.dd(i, j) = c / l2 * (1.0 - d * d / l2);
    }
  return km;
}

/// Zero-mean GP log marginal likelihood log N(y | 0, C + sigma_obs^2 I).
inline double log_marginal_likelihood(std::span<const double> times, std::span<const double> y,
                                      const StateHyperParams& hp) {
  const auto km = rbf_kernel_matrices(times, hp);
  const auto n = static_cast<Eigen::Index>(times.size());
  Eigen::MatrixXd K = km.C;
  K.diagonal().array() += hp.sigma_obs * hp.sigma_obs;
  Eigen::LLT<Eigen::MatrixXd> llt(K);
  if (llt.info() != Eigen::Success) throw NumericalError("gp: covariance not positive definite");
  const Eigen::Map<const Eigen::VectorXd> yv(y.data(), n);
  const Eigen::VectorXd alpha = llt.solve(yv);
  const double logdet = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  return -0.5 * yv.dot(alpha) - 0.5 * logdet - 0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
}

/// Conditional distribution of the derivatives given the states.
struct DerivativeConditional {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

/// Mean and covariance of x' | x for a zero-mean prior:
///   m = Cov(x',x) C^-1 x,   A = C'' - Cov(x',x) C^-1 Cov(x,x').
/// `c_jitter` is added to the diagonal of C relative to trace(C)/N before
/// factorizing; A is symmetrized and jittered by 1e-10 * trace(A)/N.
inline DerivativeConditional gp_conditional_derivative(std::span<const double> x, const KernelMatrices& km,
                                                       double c_jitter = 1e-10) {
  const auto n = km.C.rows();
  if (static_cast<Eigen::Index>(x.size()) != n) throw StructuralError("gp: state length differs from kernel size");
  Eigen::MatrixXd C = km.C;
  C.diagonal().array() += c_jitter * C.trace() / static_cast<double>(n);
  Eigen::LLT<Eigen::MatrixXd> llt(C);
  if (llt.info() != Eigen::Success) throw NumericalError("gp: kernel matrix singular beyond jitter");
  const Eigen::MatrixXd D = llt.solve(km.d_first.transpose()).transpose();  // Cov(x',x) C^-1
  DerivativeConditional out;
  out.mean = D * Eigen::Map<const Eigen::VectorXd>(x.data(), n);
  Eigen::MatrixXd A = km.dd - D * km.d_second;
  A = 0.5 * (A + A.transpose()).eval();
  A.diagonal().array() += 1e-10 * std::abs(A.trace()) / static_cast<double>(n);
  out.cov = std::move(A);
  return out;
}

}  // namespace epialloc::gp
