#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "epialloc/core/error.hpp"

namespace epialloc {

enum class ModelKind { SEIR, SEIRM, SEPIHR, SEPIHRM };

inline std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::SEIR: return "SEIR";
    case ModelKind::SEIRM: return "SEIRM";
    case ModelKind::SEPIHR: return "SEPIHR";
    case ModelKind::SEPIHRM: return "SEPIHRM";
  }
  return "?";
}

inline ModelKind parse_model_kind(std::string_view name) {
  if (name == "SEIR") return ModelKind::SEIR;
  if (name == "SEIRM") return ModelKind::SEIRM;
  if (name == "SEPIHR") return ModelKind::SEPIHR;
  if (name == "SEPIHRM") return ModelKind::SEPIHRM;
  throw DomainError("unknown model kind '" + std::string(name) + "'");
}

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  bool contains(double v) const { return v >= lo && v <= hi; }
  double width() const { return hi - lo; }
  double mid() const { return 0.5 * (lo + hi); }
};

/// Parameters are passed as a plain vector aligned with ModelSpec::param_names.
using ParamVector = std::vector<double>;

/// Per-subpopulation, per-compartment counts, laid out as [k * n_states + c].
using StateVector = std::vector<double>;

/// Which compartmental model is in use together with its free and fixed rates.
struct ModelSpec {
  ModelKind kind = ModelKind::SEIR;
  std::vector<std::string> state_names;
  std::vector<std::string> param_names;
  std::vector<Interval> param_bounds;
  std::map<std::string, double> fixed_params;

  static ModelSpec make(ModelKind kind) {
    ModelSpec m;
    m.kind = kind;
    const bool sepihr = kind == ModelKind::SEPIHR || kind == ModelKind::SEPIHRM;
    if (sepihr) {
      m.state_names = {"S", "E", "P", "I", "H", "R"};
      m.param_names = {"alpha", "beta", "delta1", "gamma1", "gamma2"};
      m.param_bounds = {{0, 2}, {0, 1}, {0, 1}, {0, 1}, {0, 1}};
      m.fixed_params = {{"delta2", 0.002}, {"delta3", 0.002}, {"gamma3", 0.06}};
    } else {
      m.state_names = {"S", "E", "I", "R"};
      m.param_names = {"alpha", "beta", "gamma"};
      m.param_bounds = {{0, 2}, {0, 1}, {0, 1}};
    }
    if (kind == ModelKind::SEIRM || kind == ModelKind::SEPIHRM) m.state_names.push_back("M");
    return m;
  }

  std::size_t n_states() const { return state_names.size(); }
  std::size_t n_params() const { return param_names.size(); }
  bool has_vaccination() const { return kind == ModelKind::SEIRM || kind == ModelKind::SEPIHRM; }

  std::optional<std::size_t> state_index(std::string_view name) const {
    for (std::size_t i = 0; i < state_names.size(); ++i)
      if (state_names[i] == name) return i;
    return std::nullopt;
  }

  std::optional<std::size_t> param_index(std::string_view name) const {
    for (std::size_t i = 0; i < param_names.size(); ++i)
      if (param_names[i] == name) return i;
    return std::nullopt;
  }

  bool in_bounds(std::span<const double> theta) const {
    if (theta.size() != param_bounds.size()) return false;
    for (std::size_t i = 0; i < theta.size(); ++i)
      if (!param_bounds[i].contains(theta[i])) return false;
    return true;
  }

  void validate() const {
    if (param_bounds.size() != param_names.size())
      throw StructuralError("model: one bound interval per parameter required");
    for (std::size_t i = 0; i < param_bounds.size(); ++i) {
      const auto& b = param_bounds[i];
      if (!(b.lo >= 0.0) || !(b.hi >= b.lo))
        throw DomainError("model: bound for '" + param_names[i] + "' must be a nonempty nonnegative interval");
    }
  }
};

/// Subpopulation sizes, mobility coupling, epidemic onset and vaccine efficacy.
struct PopulationConfig {
  std::vector<std::string> names;
  std::vector<double> N;
  std::vector<double> mobility;  // K*K row-major, mobility[r*K + k] = weight of I_r in subpop k
  std::vector<double> onset_c1;
  std::vector<double> onset_c2;
  double eta = 1.0;

  std::size_t K() const { return N.size(); }
  double lambda(std::size_t r, std::size_t k) const { return mobility[r * K() + k]; }

  // Single population, no coupling: the setting of the inference experiments.
  static PopulationConfig single(double n) {
    PopulationConfig p;
    p.names = {"pop"};
    p.N = {n};
    p.mobility = {1.0};
    p.onset_c1 = {1.0};
    p.onset_c2 = {0.0};
    p.eta = 1.0;
    return p;
  }

  std::string name(std::size_t k) const {
    return k < names.size() ? names[k] : "p" + std::to_string(k);
  }

  void validate() const {
    const std::size_t k = K();
    if (k == 0) throw StructuralError("population: at least one subpopulation required");
    if (mobility.size() != k * k) throw StructuralError("population: mobility must be K x K");
    if (onset_c1.size() != k || onset_c2.size() != k)
      throw StructuralError("population: one onset_c1/onset_c2 entry per subpopulation required");
    if (!names.empty() && names.size() != k) throw StructuralError("population: one name per subpopulation");
    for (double n : N)
      if (!(n > 0.0)) throw DomainError("population: sizes must be positive");
    for (std::size_t r = 0; r < k; ++r)
      for (std::size_t c = 0; c < k; ++c) {
        const double v = mobility[r * k + c];
        if (!(v >= 0.0)) throw DomainError("population: mobility entries must be >= 0");
        if (r == c && v != 1.0) throw DomainError("population: mobility diagonal must equal 1");
      }
    if (!(eta >= 0.0 && eta <= 1.0)) throw DomainError("population: eta must lie in [0,1]");
  }
};

/// Daily doses per subpopulation over the inclusive window [t_start, t_end].
struct VaccinePolicy {
  int t_start = 0;
  int t_end = -1;
  std::size_t K = 0;
  std::vector<double> doses;  // K * width row-major

  static VaccinePolicy zero(std::size_t k, int t_start, int t_end) {
    VaccinePolicy v;
    v.K = k;
    v.t_start = t_start;
    v.t_end = t_end;
    v.doses.assign(k * v.width(), 0.0);
    return v;
  }

  std::size_t width() const { return t_end >= t_start ? static_cast<std::size_t>(t_end - t_start + 1) : 0; }
  double& at(std::size_t k, std::size_t j) { return doses[k * width() + j]; }
  double at(std::size_t k, std::size_t j) const { return doses[k * width() + j]; }

  // Dose rate on integer day `day`; zero outside the window.
  double dose(std::size_t k, long day) const {
    if (k >= K || day < t_start || day > t_end) return 0.0;
    return doses[k * width() + static_cast<std::size_t>(day - t_start)];
  }

  bool empty() const { return doses.empty(); }
};

inline double sigmoid_onset(double c1, double c2, double t) {
  return 1.0 / (1.0 + std::exp(-c1 * (t - c2)));
}

namespace detail {

// Model, population and rates resolved once so the RK4 inner loop does no lookups.
struct CompiledModel {
  ModelKind kind;
  std::size_t nc = 0;
  std::size_t K = 0;
  bool vaccinated = false;
  bool sepihr = false;
  double alpha = 0, beta = 0, gamma = 0;
  double delta1 = 0, gamma1 = 0, gamma2 = 0, delta2 = 0, delta3 = 0, gamma3 = 0;
  double eta = 0;
  std::vector<double> N, mobility, c1, c2;
};

inline double fixed_or_throw(const ModelSpec& m, const char* name) {
  auto it = m.fixed_params.find(name);
  if (it == m.fixed_params.end()) throw StructuralError(std::string("model: missing fixed parameter ") + name);
  return it->second;
}

inline CompiledModel compile(const ModelSpec& model, const PopulationConfig& pop, std::span<const double> theta) {
  if (theta.size() != model.n_params())
    throw StructuralError("rhs: expected " + std::to_string(model.n_params()) + " parameters, got " +
                          std::to_string(theta.size()));
  for (std::size_t i = 0; i < theta.size(); ++i)
    if (!model.param_bounds[i].contains(theta[i]))
      throw DomainError("rhs: parameter '" + model.param_names[i] + "' = " + std::to_string(theta[i]) +
                        " outside bounds");
  pop.validate();
  CompiledModel c;
  c.kind = model.kind;
  c.nc = model.n_states();
  c.K = pop.K();
  c.vaccinated = model.has_vaccination();
  c.sepihr = model.kind == ModelKind::SEPIHR || model.kind == ModelKind::SEPIHRM;
  c.alpha = theta[0];
  c.beta = theta[1];
  if (c.sepihr) {
    c.delta1 = theta[2];
    c.gamma1 = theta[3];
    c.gamma2 = theta[4];
    c.delta2 = fixed_or_throw(model, "delta2");
    c.delta3 = fixed_or_throw(model, "delta3");
    c.gamma3 = fixed_or_throw(model, "gamma3");
  } else {
    c.gamma = theta[2];
  }
  c.eta = pop.eta;
  c.N = pop.N;
  c.mobility = pop.mobility;
  c.c1 = pop.onset_c1;
  c.c2 = pop.onset_c2;
  return c;
}

// dx/dt for every subpopulation. `doses` holds the day's dose rate per
// subpopulation (ignored unless the model carries an M compartment).
//
// Vaccination draws on the susceptible pool: the applied rate is
// min(eta*V, S+) and the infectable susceptibles are S+ - applied, which
// equals the textbook S - eta*V whenever S >= eta*V and keeps S >= 0 otherwise.
// `onset`, when given, supplies u_k(t) per subpopulation.
inline void rhs_into(const CompiledModel& m, std::span<const double> x, double t, std::span<const double> doses,
                     std::span<double> dx, std::span<const double> onset_k = {}) {
  const std::size_t nc = m.nc;
  const std::size_t i_idx = m.sepihr ? 3 : 2;
  for (std::size_t k = 0; k < m.K; ++k) {
    const double* xs = x.data() + k * nc;
    double* d = dx.data() + k * nc;

    double pressure = 0.0;
    for (std::size_t r = 0; r < m.K; ++r) pressure += m.mobility[r * m.K + k] * x[r * nc + i_idx];

    double applied = 0.0;
    double susceptible = xs[0];
    double onset = 1.0;
    if (m.vaccinated) {
      const double s_pos = std::max(xs[0], 0.0);
      const double v = k < doses.size() ? m.eta * doses[k] : 0.0;
      applied = std::min(v, s_pos);
      susceptible = s_pos - applied;
      onset = onset_k.empty() ? sigmoid_onset(m.c1[k], m.c2[k], t) : onset_k[k];
    }
    const double infection = onset * m.alpha / m.N[k] * susceptible * pressure;

    if (!m.sepihr) {
      const double E = xs[1], I = xs[2];
      d[0] = -applied - infection;
      d[1] = infection - m.beta * E;
      d[2] = m.beta * E - m.gamma * I;
      d[3] = m.gamma * I;
    } else {
      const double E = xs[1], P = xs[2], I = xs[3], H = xs[4];
      d[0] = -applied - infection;
      d[1] = infection - (m.beta + m.delta1) * E;
      d[2] = m.delta1 * E - (m.delta2 + m.gamma2) * P;
      d[3] = m.beta * E - (m.gamma1 + m.delta3) * I;
      d[4] = m.delta2 * P + m.delta3 * I - m.gamma3 * H;
      d[5] = m.gamma1 * I + m.gamma2 * P + m.gamma3 * H;
    }
    if (m.vaccinated) d[nc - 1] = applied;
  }
}

}  // namespace detail

/// Time derivative of the full state. The policy dose is looked up on day floor(t).
inline StateVector rhs(const ModelSpec& model, const PopulationConfig& pop, std::span<const double> theta,
                       std::span<const double> state, double t, const VaccinePolicy* policy = nullptr) {
  const auto m = detail::compile(model, pop, theta);
  if (state.size() != m.nc * m.K)
    throw StructuralError("rhs: state has " + std::to_string(state.size()) + " entries, expected " +
                          std::to_string(m.nc * m.K));
  std::vector<double> doses(m.K, 0.0);
  if (policy && m.vaccinated) {
    const long day = static_cast<long>(std::floor(t));
    for (std::size_t k = 0; k < m.K; ++k) doses[k] = policy->dose(k, day);
  }
  StateVector out(state.size());
  detail::rhs_into(m, state, t, doses, out);
  return out;
}

/// Seeds each subpopulation with `infected` persons in I and the rest susceptible.
inline StateVector default_initial_state(const ModelSpec& model, const PopulationConfig& pop, double infected = 100.0) {
  const std::size_t nc = model.n_states();
  const std::size_t i_idx = *model.state_index("I");
  StateVector x(nc * pop.K(), 0.0);
  for (std::size_t k = 0; k < pop.K(); ++k) {
    x[k * nc + i_idx] = infected;
    x[k * nc] = pop.N[k] - infected;
  }
  return x;
}

}  // namespace epialloc
