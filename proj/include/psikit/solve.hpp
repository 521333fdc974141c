#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "psikit/kernels.hpp"
#include "psikit/param_interval.hpp"
#include "psikit/psi_model.hpp"

namespace psikit {

enum class Crossing { ZeroCrossing, JumpCrossing };

struct SolveOptions {
  // Bracket width stop: width <= tolerance * (1 + |midpoint|).
  double tolerance = 1e-10;
  // Crossing classification: |f(theta)| <= residual_tolerance * scale, where
  // scale is max |f| over the initial bracket found by expansion.
  double residual_tolerance = 1e-8;
  // NaN: pick an interior point from the interval.
  double initial_probe = std::numeric_limits<double>::quiet_NaN();
  int max_expansions = 200;
  int max_iterations = 2000;

  // Off: pure sign-bisection. On: bracketed false-position acceleration.
  // Auto: On iff the model declares continuity; Off for raw functions.
  enum class Accel { Off, Auto, On };
  Accel acceleration = Accel::Off;
};

struct SignChangeResult {
  double theta = 0.0;
  double bracket_lo = 0.0;
  double bracket_hi = 0.0;
  double residual = std::numeric_limits<double>::quiet_NaN();
  // max |f| over the initial bracket; the scale residual_tolerance applies to.
  double scale = 0.0;
  Crossing crossing = Crossing::ZeroCrossing;
  int iterations = 0;
};

// Locates the point of sign change (positive left, negative right) of f on
// theta. Expands geometrically from the probe to find a sign bracket, then
// refines it by sign-bisection. Throws BracketNotFound when the expansion
// budget ends without a bracket, NonFiniteEvaluation on NaN/inf from f.
SignChangeResult locate_sign_change(const std::function<double(double)>& f,
                                    const ParamInterval& theta,
                                    const SolveOptions& opts = {});

namespace detail {

inline SolveOptions resolve_acceleration(SolveOptions opts, bool continuous) {
  if (opts.acceleration == SolveOptions::Accel::Auto) {
    opts.acceleration = continuous ? SolveOptions::Accel::On
                                   : SolveOptions::Accel::Off;
  }
  return opts;
}

}  // namespace detail

// theta1: the estimator of a single observation.
template <class Obs>
SignChangeResult theta1(const PsiModel<Obs>& model, const Obs& x,
                        const SolveOptions& opts = {}) {
  const SolveOptions resolved =
      detail::resolve_acceleration(opts, model.continuous);
  return locate_sign_change([&](double t) { return model.psi(x, t); },
                            model.theta, resolved);
}

// Weighted generalized psi-estimator: the sign-change point of
// t -> sum_i lambda_i psi(x_i, t). The inner sum uses the fixed pairwise
// tree, so results do not depend on evaluation order.
template <class Obs>
SignChangeResult estimate(const PsiModel<Obs>& model,
                          const WeightedSample<Obs>& sample,
                          const SolveOptions& opts = {}) {
  sample.validate();
  const SolveOptions resolved =
      detail::resolve_acceleration(opts, model.continuous);
  std::vector<double> terms(sample.size());
  auto objective = [&](double t) {
    for (std::size_t i = 0; i < sample.size(); ++i) {
      terms[i] = sample.weights[i] * model.psi(sample.observations[i], t);
    }
    return pairwise_sum(terms, Exec::Serial);
  };
  return locate_sign_change(objective, model.theta, resolved);
}

// The comparison map t -> -psi(x,t) / psi(y,t) on (theta1(x), theta1(y)).
struct ComparisonFunction {
  double domain_lo = 0.0;
  double domain_hi = 0.0;
  std::function<double(double)> value;

  double operator()(double t) const { return value(t); }
};

// Throws DomainEmpty when theta1(x) >= theta1(y) (up to bracket widths).
// Evaluations throw DivisionNearZero when |psi(y,t)| falls below the guard,
// which flags a model without unique single-observation estimators.
template <class Obs>
ComparisonFunction comparison_function(const PsiModel<Obs>& model, const Obs& x,
                                       const Obs& y,
                                       const SolveOptions& opts = {}) {
  const SignChangeResult tx = theta1(model, x, opts);
  const SignChangeResult ty = theta1(model, y, opts);
  const double margin = (tx.bracket_hi - tx.bracket_lo) +
                        (ty.bracket_hi - ty.bracket_lo);
  if (!(tx.theta < ty.theta - margin)) throw DomainEmpty(tx.theta, ty.theta);

  ComparisonFunction cf;
  cf.domain_lo = tx.theta;
  cf.domain_hi = ty.theta;
  cf.value = [&model, x, y](double t) {
    const double num = model.psi(x, t);
    const double den = model.psi(y, t);
    if (std::abs(den) <= 1e-13 * (1.0 + std::abs(num))) {
      throw DivisionNearZero(t);
    }
    return -num / den;
  };
  return cf;
}

}  // namespace psikit
