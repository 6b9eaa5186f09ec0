#pragma once

// Adaptive Runge-Kutta-Fehlberg 7(8) reference integrator for the
// single-population SEIR model, written against the textbook equations only.

#include <array>

#include <boost/numeric/odeint.hpp>

namespace oracle {

using Seir = std::array<double, 4>;

inline Seir seir_reference(Seir x, double alpha, double beta, double gamma, double n, double t_end) {
  namespace ode = boost::numeric::odeint;
  auto f = [=](const Seir& s, Seir& d, double) {
    const double inf = alpha * s[0] * s[2] / n;
    d[0] = -inf;
    d[1] = inf - beta * s[1];
    d[2] = beta * s[1] - gamma * s[2];
    d[3] = gamma * s[2];
  };
  auto stepper = ode::make_controlled(1e-14, 1e-14, ode::runge_kutta_fehlberg78<Seir>());
  ode::integrate_adaptive(stepper, f, x, 0.0, t_end, 1e-3);
  return x;
}

}  // namespace oracle
