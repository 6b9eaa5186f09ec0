#pragma once

#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

namespace epialloc {

struct SimplexResult {
  std::vector<double> x;
  double value = 0.0;
  std::size_t iterations = 0;
};

struct SimplexOptions {
  double initial_step = 0.5;
  double size_tol = 1e-10;
  std::size_t max_iterations = 5000;
};

/// Derivative-free Nelder-Mead minimization (GSL nmsimplex2). Non-finite
/// objective values are mapped to a large finite penalty.
inline SimplexResult nelder_mead(const std::function<double(std::span<const double>)>& f, std::vector<double> x0,
                                 const SimplexOptions& opts = {}) {
  struct Ctx {
    const std::function<double(std::span<const double>)>* f;
    std::size_t n;
  } ctx{&f, x0.size()};

  gsl_multimin_function fn;
  fn.n = x0.size();
  fn.params = &ctx;
  fn.f = [](const gsl_vector* v, void* p) -> double {
    auto* c = static_cast<Ctx*>(p);
    std::vector<double> x(c->n);
    for (std::size_t i = 0; i < c->n; ++i) x[i] = gsl_vector_get(v, i);
    const double r = (*c->f)(x);
    return std::isfinite(r) ? r : 1e300;
  };

  gsl_vector* start = gsl_vector_alloc(x0.size());
  gsl_vector* step = gsl_vector_alloc(x0.size());
  for (std::size_t i = 0; i < x0.size(); ++i) {
    gsl_vector_set(start, i, x0[i]);
    gsl_vector_set(step, i, opts.initial_step);
  }
  gsl_multimin_fminimizer* s = gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, x0.size());
  gsl_multimin_fminimizer_set(s, &fn, start, step);

  SimplexResult out;
  int status = GSL_CONTINUE;
  while (status == GSL_CONTINUE && out.iterations < opts.max_iterations) {
    ++out.iterations;
    if (gsl_multimin_fminimizer_iterate(s) != GSL_SUCCESS) break;
    status = gsl_multimin_test_size(gsl_multimin_fminimizer_size(s), opts.size_tol);
  }
  out.x.resize(x0.size());
  for (std::size_t i = 0; i < x0.size(); ++i) out.x[i] = gsl_vector_get(s->x, i);
  out.value = s->fval;

  gsl_multimin_fminimizer_free(s);
  gsl_vector_free(step);
  gsl_vector_free(start);
  return out;
}

}  // namespace epialloc
