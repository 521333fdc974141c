#pragma once

#include <functional>

namespace psikit {

struct QuadratureOptions {
  // Adaptive Simpson: absolute tolerance per integral and recursion cap.
  double simpson_tolerance = 1e-10;
  int simpson_max_depth = 40;
  // Trapezoid refinement: subintervals per grid cell for callable integrands.
  int trapezoid_refine = 32;
};

// Composite trapezoid with n uniform subintervals; handles a > b by sign.
double composite_trapezoid(const std::function<double(double)>& f, double a,
                           double b, int n);

// Adaptive Simpson with Richardson correction; handles a > b by sign.
// Throws NonFiniteEvaluation when f returns NaN/inf.
double adaptive_simpson(const std::function<double(double)>& f, double a,
                        double b, double tol = 1e-10, int max_depth = 40);

}  // namespace psikit
