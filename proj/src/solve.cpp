#include "psikit/solve.hpp"

#include <algorithm>
#include <cmath>

#include "psikit/errors.hpp"

namespace psikit {

namespace {

double eval_checked(const std::function<double(double)>& f, double t) {
  const double v = f(t);
  if (!std::isfinite(v)) throw NonFiniteEvaluation(t);
  return v;
}

double width_tolerance(const SolveOptions& opts, double at) {
  return opts.tolerance * (1.0 + std::abs(at));
}

// Exact zero hit: for sign-changing functions a zero can only sit at the
// sign-change point itself, so report it with a tolerance-wide bracket.
SignChangeResult zero_hit(double t0, const ParamInterval& theta,
                          const SolveOptions& opts, double scale,
                          int iterations) {
  const double half = 0.5 * width_tolerance(opts, t0);
  SignChangeResult r;
  r.theta = t0;
  r.bracket_lo = std::max(t0 - half, theta.lo());
  r.bracket_hi = std::min(t0 + half, theta.hi());
  r.residual = 0.0;
  r.scale = scale;
  r.crossing = Crossing::ZeroCrossing;
  r.iterations = iterations;
  return r;
}

struct Probe {
  double t;
  double value;
  bool exact_zero;
};

// Geometric walk from `from` toward one interval end until f takes the
// requested sign. Infinite ends are approached by doubling steps, finite
// ends by halving the remaining gap (so probes stay strictly inside).
Probe expand_for_sign(const std::function<double(double)>& f, double from,
                      double endpoint, bool want_positive,
                      const SolveOptions& opts, int& evals) {
  const bool toward_hi = endpoint > from;
  double t = from;
  double step = std::max(1.0, 0.5 * std::abs(from));
  for (int k = 0; k < opts.max_expansions; ++k) {
    double next;
    if (std::isinf(endpoint)) {
      next = toward_hi ? t + step : t - step;
      step *= 2.0;
    } else {
      next = t + 0.5 * (endpoint - t);
    }
    if (next == t) break;  // endpoint gap below floating-point resolution
    t = next;
    const double v = eval_checked(f, t);
    ++evals;
    if (v == 0.0) return {t, v, true};
    if ((v > 0.0) == want_positive) return {t, v, false};
  }
  throw BracketNotFound(
      want_positive
          ? "no positive value found toward the lower end of the interval"
          : "no negative value found toward the upper end of the interval");
}

}  // namespace

SignChangeResult locate_sign_change(const std::function<double(double)>& f,
                                    const ParamInterval& theta,
                                    const SolveOptions& opts) {
  double probe = opts.initial_probe;
  if (std::isnan(probe)) probe = theta.default_probe();
  if (!theta.contains(probe)) {
    throw NumericError("PROBE_OUTSIDE_THETA",
                       "initial probe lies outside the parameter interval");
  }

  int iterations = 0;
  const double f0 = eval_checked(f, probe);
  ++iterations;
  if (f0 == 0.0) return zero_hit(probe, theta, opts, 0.0, iterations);

  // Initial sign bracket: a with f(a) > 0 left of b with f(b) < 0.
  double a, fa, b, fb;
  if (f0 > 0.0) {
    a = probe;
    fa = f0;
    const Probe p = expand_for_sign(f, probe, theta.hi(), false, opts, iterations);
    if (p.exact_zero) return zero_hit(p.t, theta, opts, std::abs(fa), iterations);
    b = p.t;
    fb = p.value;
  } else {
    b = probe;
    fb = f0;
    const Probe p = expand_for_sign(f, probe, theta.lo(), true, opts, iterations);
    if (p.exact_zero) return zero_hit(p.t, theta, opts, std::abs(fb), iterations);
    a = p.t;
    fa = p.value;
  }

  const double scale = std::max(std::abs(fa), std::abs(fb));
  const bool accelerate = opts.acceleration == SolveOptions::Accel::On;

  bool use_interp = false;  // alternates with bisection when accelerating
  while (b - a > width_tolerance(opts, 0.5 * (a + b))) {
    if (iterations >= opts.max_iterations) {
      throw NumericError("MAX_ITERATIONS",
                         "sign-change refinement exceeded the iteration budget");
    }
    double mid = 0.5 * (a + b);
    if (accelerate && use_interp && fb != fa) {
      const double cand = (a * fb - b * fa) / (fb - fa);
      const double w = b - a;
      mid = std::clamp(cand, a + 0.05 * w, b - 0.05 * w);
    }
    use_interp = !use_interp;

    const double fm = eval_checked(f, mid);
    ++iterations;
    if (fm > 0.0) {
      a = mid;
      fa = fm;
    } else if (fm < 0.0) {
      b = mid;
      fb = fm;
    } else {
      SignChangeResult r = zero_hit(mid, theta, opts, scale, iterations);
      r.bracket_lo = std::max(r.bracket_lo, a);
      r.bracket_hi = std::min(r.bracket_hi, b);
      return r;
    }
  }

  SignChangeResult r;
  r.theta = 0.5 * (a + b);
  r.bracket_lo = a;
  r.bracket_hi = b;
  r.residual = f(r.theta);
  r.scale = scale;
  r.crossing = (std::isfinite(r.residual) &&
                std::abs(r.residual) <= opts.residual_tolerance * scale)
                   ? Crossing::ZeroCrossing
                   : Crossing::JumpCrossing;
  r.iterations = iterations;
  return r;
}

}  // namespace psikit
