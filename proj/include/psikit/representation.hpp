#pragma once

#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "psikit/param_interval.hpp"
#include "psikit/psi_model.hpp"
#include "psikit/quadrature.hpp"
#include "psikit/solve.hpp"

namespace psikit {

// Derivative-to-value ratio d2psi(z,t) / psi(z,t). Uses the model's d2psi
// when present, central finite differences otherwise. Throws AtTheta1 inside
// the exclusion radius of theta1(z), where the ratio has a pole.
// exclusion_radius <= 0 selects the default 1e-4 * (1 + |theta1(z)|).
double log_derivative_ratio(const RealPsiModel& model, double z, double t,
                            double exclusion_radius = 0.0,
                            const SolveOptions& opts = {});

struct EnvelopeConfig {
  std::vector<double> family;  // representative observations
  std::vector<double> grid;    // strictly increasing, inside theta
  // <= 0: per-member default 1e-4 * (1 + |theta1|).
  double exclusion_radius = 0.0;
  // When set, every grid point must have family members on both sides;
  // otherwise the missing side is reported as NaN in the table.
  bool require_two_sided = false;

  void validate(const ParamInterval& theta) const;
};

// Evaluable one-sided family envelopes of the log-derivative ratio.
// q_lower(t): max of ratios over members with theta1 right of t (NaN if that
// side is empty); q_upper(t): min over members with theta1 left of t.
// Members within their exclusion radius of t are left out of both sides.
class FamilyEnvelope {
 public:
  FamilyEnvelope(const RealPsiModel& model, std::vector<double> family,
                 double exclusion_radius = 0.0, const SolveOptions& opts = {});

  double q_lower(double t) const;
  double q_upper(double t) const;

  // q_lower where defined, falling back to q_upper past the family's theta1
  // range; throws RichnessViolated when neither side has a member.
  double integrand(double t) const;

  const std::vector<double>& theta1s() const noexcept { return theta1s_; }
  double theta1_min() const noexcept { return theta1_min_; }
  double theta1_max() const noexcept { return theta1_max_; }

 private:
  double side_value(double t, bool lower) const;

  const RealPsiModel* model_;
  std::vector<double> family_;
  std::vector<double> theta1s_;
  std::vector<double> exclusion_;
  double theta1_min_ = 0.0;
  double theta1_max_ = 0.0;
};

struct EnvelopeTable {
  std::vector<double> t;
  std::vector<double> q_lower;  // NaN where the right side is empty
  std::vector<double> q_upper;  // NaN where the left side is empty
  std::vector<double> gap;      // q_upper - q_lower; NaN where one-sided
};

// Tabulates the family envelopes over cfg.grid. Throws RichnessViolated at
// the first grid point missing a required side (under require_two_sided) and
// EnvelopeOrderViolated where q_lower exceeds q_upper beyond
// 1e-9 * (1 + scale) -- the sign that the comparison-function condition
// fails for this family.
EnvelopeTable q_star_envelope(const RealPsiModel& model,
                              const EnvelopeConfig& cfg);

// Positive weight p on a working grid: log p(t) = -integral_tau^t q(s) ds,
// stored at the nodes and interpolated linearly in between. tau is inserted
// as a node, so p(tau) == 1 exactly.
struct MonotoneWeight {
  double tau = 0.0;
  std::vector<double> grid;
  std::vector<double> log_p;
  enum class Interp { Linear };
  Interp interpolation = Interp::Linear;

  double span_lo() const { return grid.front(); }
  double span_hi() const { return grid.back(); }
  double log_p_at(double t) const;  // throws OutsideGridSpan
  double p_at(double t) const;
};

// q known at the nodes only: cumulative trapezoid over the cells.
MonotoneWeight build_monotone_weight(std::span<const double> grid,
                                     std::span<const double> q_values,
                                     double tau);

// q evaluable anywhere: each cell integrated by a refined trapezoid.
MonotoneWeight build_monotone_weight(const std::function<double(double)>& q,
                                     std::span<const double> grid, double tau,
                                     const QuadratureOptions& quadrature = {});

// t -> p(t) * psi(z, t) on the weight's grid span.
std::function<double(double)> weighted_psi(const RealPsiModel& model,
                                           const MonotoneWeight& weight,
                                           double z);

struct ConvexifiedLoss {
  RealPsiModel model;
  MonotoneWeight weight;
  QuadratureOptions quadrature;
  SolveOptions solve_options;
};

// rho*(z, .) for one observation, anchored at theta1(z). The signed integral
// of p psi is accumulated once over the weight's cells (adaptive Simpson per
// cell, where log p is linear and the integrand smooth); evaluations then
// only integrate the final partial cell.
class ConvexifiedProfile {
 public:
  ConvexifiedProfile(const ConvexifiedLoss& loss, double z);

  // rho*(z, t); throws OutsideGridSpan outside the weight span.
  double operator()(double t) const;

  double theta1() const noexcept { return th1_; }

 private:
  RealPsiModel model_;
  MonotoneWeight weight_;
  QuadratureOptions quadrature_;
  double z_ = 0.0;
  double th1_ = 0.0;
  std::vector<double> cumulative_;  // int_{theta1}^{node_k} p psi
};

// rho*(z, t) = -integral_{theta1(z)}^{t} p(s) psi(z, s) ds. One-off wrapper
// around ConvexifiedProfile; build the profile directly when evaluating the
// same observation repeatedly.
double convexified_loss(const ConvexifiedLoss& loss, double z, double t);

// rho*(z, .) at every node of `at`.
std::vector<double> convexified_loss_table(const ConvexifiedLoss& loss,
                                           double z,
                                           std::span<const double> at);

struct MinimizeOptions {
  // Width stop: (c - a) <= tolerance * (1 + |midpoint|).
  double tolerance = 1e-4;
  double initial_probe = std::numeric_limits<double>::quiet_NaN();
  int max_expansions = 200;
  int max_iterations = 500;
};

// Minimizer of a continuous strictly-decreasing-then-increasing function by
// bracket expansion plus golden-section. Throws BracketNotFound when no
// descent-then-ascent pattern shows up within the budget.
double argmin_objective(const std::function<double(double)>& f,
                        const ParamInterval& span,
                        const MinimizeOptions& opts = {});

std::vector<double> make_uniform_grid(double lo, double hi, int n);
std::vector<double> make_log_grid(double lo, double hi, int n);

}  // namespace psikit
