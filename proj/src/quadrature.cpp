#include "psikit/quadrature.hpp"

#include <cmath>

#include "psikit/errors.hpp"

namespace psikit {

namespace {

double eval_checked(const std::function<double(double)>& f, double t) {
  const double v = f(t);
  if (!std::isfinite(v)) throw NonFiniteEvaluation(t);
  return v;
}

double simpson(double h, double fa, double fm, double fb) {
  return (fa + 4.0 * fm + fb) * (h / 6.0);
}

double simpson_rec(const std::function<double(double)>& f, double a, double m,
                   double b, double fa, double fm, double fb, double whole,
                   double tol, int depth) {
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = eval_checked(f, lm);
  const double frm = eval_checked(f, rm);
  const double left = simpson(m - a, fa, flm, fm);
  const double right = simpson(b - m, fm, frm, fb);
  const double err = left + right - whole;
  if (depth <= 0 || std::abs(err) <= 15.0 * tol) {
    return left + right + err / 15.0;
  }
  return simpson_rec(f, a, lm, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_rec(f, m, rm, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace

double composite_trapezoid(const std::function<double(double)>& f, double a,
                           double b, int n) {
  if (a == b) return 0.0;
  if (n < 1) n = 1;
  const double h = (b - a) / n;
  double s = 0.5 * (eval_checked(f, a) + eval_checked(f, b));
  for (int i = 1; i < n; ++i) s += eval_checked(f, a + i * h);
  return s * h;
}

double adaptive_simpson(const std::function<double(double)>& f, double a,
                        double b, double tol, int max_depth) {
  if (a == b) return 0.0;
  if (a > b) return -adaptive_simpson(f, b, a, tol, max_depth);
  const double m = 0.5 * (a + b);
  const double fa = eval_checked(f, a);
  const double fm = eval_checked(f, m);
  const double fb = eval_checked(f, b);
  const double whole = simpson(b - a, fa, fm, fb);
  return simpson_rec(f, a, m, b, fa, fm, fb, whole, tol, max_depth);
}

}  // namespace psikit
