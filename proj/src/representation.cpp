#include "psikit/representation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "psikit/errors.hpp"
#include "psikit/kernels.hpp"
#include "psikit/quadrature.hpp"

namespace psikit {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double default_exclusion(double theta1) {
  return 1e-4 * (1.0 + std::abs(theta1));
}

double theta1_of(const RealPsiModel& model, double z, const SolveOptions& opts) {
  if (model.has_theta1_closed_form()) return model.theta1_closed_form(z);
  return theta1(model, z, opts).theta;
}

// Ratio with theta1 already known; caller keeps t outside the exclusion zone.
double ratio_at(const RealPsiModel& model, double z, double t) {
  const double value = model.psi(z, t);
  if (value == 0.0) return kNaN;
  double deriv;
  if (model.has_d2psi()) {
    deriv = model.d2psi(z, t);
  } else {
    double h = 1e-6 * (1.0 + std::abs(t));
    const ParamInterval& theta = model.theta;
    if (std::isfinite(theta.lo())) h = std::min(h, 0.5 * (t - theta.lo()));
    if (std::isfinite(theta.hi())) h = std::min(h, 0.5 * (theta.hi() - t));
    deriv = (model.psi(z, t + h) - model.psi(z, t - h)) / (2.0 * h);
  }
  return deriv / value;
}

}  // namespace

double log_derivative_ratio(const RealPsiModel& model, double z, double t,
                            double exclusion_radius, const SolveOptions& opts) {
  const double th1 = theta1_of(model, z, opts);
  const double excl =
      exclusion_radius > 0.0 ? exclusion_radius : default_exclusion(th1);
  if (std::abs(t - th1) < excl) throw AtTheta1(t, th1);
  const double r = ratio_at(model, z, t);
  if (!std::isfinite(r)) throw NonFiniteEvaluation(t);
  return r;
}

void EnvelopeConfig::validate(const ParamInterval& theta) const {
  if (family.empty()) {
    throw ConfigError("CONFIG_EMPTY_FAMILY", "envelope family must be nonempty");
  }
  if (grid.size() < 2) {
    throw ConfigError("CONFIG_GRID_TOO_SMALL",
                      "envelope grid needs at least two points");
  }
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!std::isfinite(grid[i]) || !theta.contains(grid[i])) {
      throw ConfigError("CONFIG_GRID_OUT_OF_THETA",
                        "grid point " + std::to_string(grid[i]) +
                            " outside the parameter interval");
    }
    if (i > 0 && !(grid[i - 1] < grid[i])) {
      throw ConfigError("CONFIG_GRID_NOT_INCREASING",
                        "grid must be strictly increasing");
    }
  }
}

FamilyEnvelope::FamilyEnvelope(const RealPsiModel& model,
                               std::vector<double> family,
                               double exclusion_radius,
                               const SolveOptions& opts)
    : model_(&model), family_(std::move(family)) {
  if (family_.empty()) {
    throw ConfigError("CONFIG_EMPTY_FAMILY", "envelope family must be nonempty");
  }
  theta1s_.reserve(family_.size());
  exclusion_.reserve(family_.size());
  for (double z : family_) {
    const double th1 = theta1_of(model, z, opts);
    theta1s_.push_back(th1);
    exclusion_.push_back(exclusion_radius > 0.0 ? exclusion_radius
                                                : default_exclusion(th1));
  }
  theta1_min_ = *std::min_element(theta1s_.begin(), theta1s_.end());
  theta1_max_ = *std::max_element(theta1s_.begin(), theta1s_.end());
}

double FamilyEnvelope::side_value(double t, bool lower) const {
  double best = kNaN;
  bool found = false;
  for (std::size_t j = 0; j < family_.size(); ++j) {
    const double th1 = theta1s_[j];
    if (std::abs(th1 - t) < exclusion_[j]) continue;
    if (lower ? !(th1 > t) : !(th1 < t)) continue;
    const double r = ratio_at(*model_, family_[j], t);
    if (std::isnan(r)) return kNaN;  // poisoned evaluation
    if (!found || (lower ? r > best : r < best)) {
      best = r;
      found = true;
    }
  }
  return found ? best : kNaN;
}

double FamilyEnvelope::q_lower(double t) const { return side_value(t, true); }

double FamilyEnvelope::q_upper(double t) const { return side_value(t, false); }

double FamilyEnvelope::integrand(double t) const {
  const double lo = q_lower(t);
  if (!std::isnan(lo)) return lo;
  const double up = q_upper(t);
  if (!std::isnan(up)) return up;
  throw RichnessViolated(t);
}

EnvelopeTable q_star_envelope(const RealPsiModel& model,
                              const EnvelopeConfig& cfg) {
  cfg.validate(model.theta);
  const FamilyEnvelope env(model, cfg.family, cfg.exclusion_radius);

  const std::size_t n = cfg.grid.size();
  EnvelopeTable table;
  table.t = cfg.grid;
  table.q_lower.assign(n, kNaN);
  table.q_upper.assign(n, kNaN);
  table.gap.assign(n, kNaN);

  for_each_index(
      n,
      [&](std::size_t i) {
        const double t = cfg.grid[i];
        table.q_lower[i] = env.q_lower(t);
        table.q_upper[i] = env.q_upper(t);
      },
      default_exec());

  // Serial ascending post-scan keeps the reported t deterministic.
  for (std::size_t i = 0; i < n; ++i) {
    const double lo = table.q_lower[i];
    const double up = table.q_upper[i];
    if (cfg.require_two_sided && (std::isnan(lo) || std::isnan(up))) {
      throw RichnessViolated(cfg.grid[i]);
    }
    if (!std::isnan(lo) && !std::isnan(up)) {
      const double tol = 1e-9 * (1.0 + std::max(std::abs(lo), std::abs(up)));
      if (lo > up + tol) throw EnvelopeOrderViolated(cfg.grid[i], lo, up);
      table.gap[i] = up - lo;
    }
  }
  return table;
}

double MonotoneWeight::log_p_at(double t) const {
  const double lo = grid.front();
  const double hi = grid.back();
  const double slack_lo = 1e-9 * (1.0 + std::abs(lo));
  const double slack_hi = 1e-9 * (1.0 + std::abs(hi));
  if (t < lo - slack_lo || t > hi + slack_hi) throw OutsideGridSpan(t);
  const double tc = std::clamp(t, lo, hi);
  const auto it = std::upper_bound(grid.begin(), grid.end(), tc);
  std::size_t k = static_cast<std::size_t>(it - grid.begin());
  if (k == 0) return log_p.front();
  if (k >= grid.size()) return log_p.back();
  const double t0 = grid[k - 1];
  const double t1 = grid[k];
  const double w = (tc - t0) / (t1 - t0);
  return log_p[k - 1] + w * (log_p[k] - log_p[k - 1]);
}

double MonotoneWeight::p_at(double t) const { return std::exp(log_p_at(t)); }

namespace {

void check_weight_grid(std::span<const double> grid) {
  if (grid.size() < 2) {
    throw ConfigError("CONFIG_GRID_TOO_SMALL",
                      "weight grid needs at least two points");
  }
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!std::isfinite(grid[i])) {
      throw ConfigError("CONFIG_GRID_NOT_FINITE", "grid points must be finite");
    }
    if (i > 0 && !(grid[i - 1] < grid[i])) {
      throw ConfigError("CONFIG_GRID_NOT_INCREASING",
                        "grid must be strictly increasing");
    }
  }
}

// Inserts tau as a node unless one already matches; returns its index.
std::size_t insert_tau(std::vector<double>& grid, double tau) {
  if (!(grid.front() <= tau && tau <= grid.back())) {
    throw TauOutsideGrid(tau, grid.front(), grid.back());
  }
  const double snap = 1e-12 * (1.0 + std::abs(tau));
  auto it = std::lower_bound(grid.begin(), grid.end(), tau);
  if (it != grid.end() && std::abs(*it - tau) <= snap) {
    return static_cast<std::size_t>(it - grid.begin());
  }
  if (it != grid.begin() && std::abs(*(it - 1) - tau) <= snap) {
    return static_cast<std::size_t>(it - grid.begin()) - 1;
  }
  it = grid.insert(it, tau);
  return static_cast<std::size_t>(it - grid.begin());
}

MonotoneWeight accumulate_weight(std::vector<double> grid,
                                 std::size_t tau_index, double tau,
                                 const std::vector<double>& cell_integrals) {
  MonotoneWeight w;
  w.tau = tau;
  w.log_p.assign(grid.size(), 0.0);
  // log p(t) = -int_tau^t q; exact zero at the tau node.
  for (std::size_t k = tau_index; k + 1 < grid.size(); ++k) {
    w.log_p[k + 1] = w.log_p[k] - cell_integrals[k];
  }
  for (std::size_t k = tau_index; k-- > 0;) {
    w.log_p[k] = w.log_p[k + 1] + cell_integrals[k];
  }
  w.grid = std::move(grid);
  return w;
}

}  // namespace

MonotoneWeight build_monotone_weight(std::span<const double> grid,
                                     std::span<const double> q_values,
                                     double tau) {
  check_weight_grid(grid);
  if (q_values.size() != grid.size()) {
    throw ConfigError("CONFIG_GRID_MISMATCH",
                      "q values and grid differ in length");
  }
  std::vector<double> nodes(grid.begin(), grid.end());
  std::vector<double> q(q_values.begin(), q_values.end());
  const std::size_t tau_index = insert_tau(nodes, tau);
  if (nodes.size() != q.size()) {
    // tau was inserted between nodes; interpolate q there.
    const double t0 = nodes[tau_index - 1];
    const double t1 = nodes[tau_index + 1];
    const double w = (tau - t0) / (t1 - t0);
    const double q_tau =
        q[tau_index - 1] + w * (q[tau_index] - q[tau_index - 1]);
    q.insert(q.begin() + static_cast<std::ptrdiff_t>(tau_index), q_tau);
  }
  std::vector<double> cells(nodes.size() - 1);
  for (std::size_t k = 0; k + 1 < nodes.size(); ++k) {
    cells[k] = 0.5 * (q[k] + q[k + 1]) * (nodes[k + 1] - nodes[k]);
  }
  return accumulate_weight(std::move(nodes), tau_index, tau, cells);
}

MonotoneWeight build_monotone_weight(const std::function<double(double)>& q,
                                     std::span<const double> grid, double tau,
                                     const QuadratureOptions& quadrature) {
  check_weight_grid(grid);
  std::vector<double> nodes(grid.begin(), grid.end());
  const std::size_t tau_index = insert_tau(nodes, tau);
  std::vector<double> cells(nodes.size() - 1);
  for_each_index(
      cells.size(),
      [&](std::size_t k) {
        cells[k] = composite_trapezoid(q, nodes[k], nodes[k + 1],
                                       quadrature.trapezoid_refine);
      },
      default_exec());
  return accumulate_weight(std::move(nodes), tau_index, tau, cells);
}

std::function<double(double)> weighted_psi(const RealPsiModel& model,
                                           const MonotoneWeight& weight,
                                           double z) {
  return [model, weight, z](double t) {
    return weight.p_at(t) * model.psi(z, t);
  };
}

ConvexifiedProfile::ConvexifiedProfile(const ConvexifiedLoss& loss, double z)
    : model_(loss.model),
      weight_(loss.weight),
      quadrature_(loss.quadrature),
      z_(z),
      th1_(theta1_of(loss.model, z, loss.solve_options)) {
  weight_.log_p_at(th1_);  // theta1 must lie inside the span
  const std::vector<double>& nodes = weight_.grid;
  const std::size_t n = nodes.size();
  const auto f = weighted_psi(model_, weight_, z_);
  const double span = nodes.back() - nodes.front();
  const double tol = quadrature_.simpson_tolerance;
  const int depth = quadrature_.simpson_max_depth;
  auto cell_tol = [&](double a, double b) {
    return std::max(tol * (std::abs(b - a) / span), 1e-300);
  };

  // Per-cell integrals; log p is linear inside each cell.
  std::vector<double> cells(n - 1, 0.0);
  for_each_index(
      cells.size(),
      [&](std::size_t k) {
        cells[k] = adaptive_simpson(f, nodes[k], nodes[k + 1],
                                    cell_tol(nodes[k], nodes[k + 1]), depth);
      },
      default_exec());

  // j0: first node at or right of theta1(z).
  std::size_t j0 = 0;
  while (j0 < n && nodes[j0] < th1_) ++j0;

  cumulative_.assign(n, 0.0);
  if (j0 < n) {
    cumulative_[j0] =
        adaptive_simpson(f, th1_, nodes[j0], cell_tol(th1_, nodes[j0]), depth);
    for (std::size_t j = j0; j + 1 < n; ++j) {
      cumulative_[j + 1] = cumulative_[j] + cells[j];
    }
    for (std::size_t j = j0; j-- > 0;) {
      cumulative_[j] = cumulative_[j + 1] - cells[j];
    }
  } else {
    cumulative_[n - 1] = adaptive_simpson(f, th1_, nodes[n - 1],
                                          cell_tol(th1_, nodes[n - 1]), depth);
    for (std::size_t j = n - 1; j-- > 0;) {
      cumulative_[j] = cumulative_[j + 1] - cells[j];
    }
  }
}

double ConvexifiedProfile::operator()(double t) const {
  const std::vector<double>& nodes = weight_.grid;
  weight_.log_p_at(t);  // span check
  if (t == th1_) return 0.0;  // empty integral
  const double tc = std::clamp(t, nodes.front(), nodes.back());
  auto it = std::upper_bound(nodes.begin(), nodes.end(), tc);
  std::size_t k = static_cast<std::size_t>(it - nodes.begin());
  if (k > 0) --k;
  const auto f = weighted_psi(model_, weight_, z_);
  const double span = nodes.back() - nodes.front();
  const double tol = std::max(
      quadrature_.simpson_tolerance * (std::abs(tc - nodes[k]) / span), 1e-300);
  const double partial =
      adaptive_simpson(f, nodes[k], tc, tol, quadrature_.simpson_max_depth);
  return -(cumulative_[k] + partial);
}

double convexified_loss(const ConvexifiedLoss& loss, double z, double t) {
  return ConvexifiedProfile(loss, z)(t);
}

std::vector<double> convexified_loss_table(const ConvexifiedLoss& loss,
                                           double z,
                                           std::span<const double> at) {
  std::vector<double> out(at.size(), 0.0);
  if (at.empty()) return out;
  const ConvexifiedProfile profile(loss, z);
  profile(at.front());
  profile(at.back());
  for_each_index(
      at.size(), [&](std::size_t i) { out[i] = profile(at[i]); },
      default_exec());
  return out;
}

namespace {

double eval_finite(const std::function<double(double)>& f, double t) {
  const double v = f(t);
  if (!std::isfinite(v)) throw NonFiniteEvaluation(t);
  return v;
}

// One geometric step from x toward the interval end.
double advance(double x, double endpoint, double& step) {
  double next;
  if (std::isinf(endpoint)) {
    next = endpoint > x ? x + step : x - step;
    step *= 2.0;
  } else {
    next = x + 0.5 * (endpoint - x);
  }
  return next;
}

double golden_section(const std::function<double(double)>& f, double a,
                      double c, const MinimizeOptions& opts) {
  constexpr double invphi = 0.6180339887498949;
  double x1 = c - invphi * (c - a);
  double x2 = a + invphi * (c - a);
  double f1 = eval_finite(f, x1);
  double f2 = eval_finite(f, x2);
  int iterations = 0;
  while (c - a > opts.tolerance * (1.0 + std::abs(0.5 * (a + c)))) {
    if (++iterations > opts.max_iterations) break;
    if (f1 < f2) {
      c = x2;
      x2 = x1;
      f2 = f1;
      x1 = c - invphi * (c - a);
      f1 = eval_finite(f, x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + invphi * (c - a);
      f2 = eval_finite(f, x2);
    }
  }
  return 0.5 * (a + c);
}

}  // namespace

double argmin_objective(const std::function<double(double)>& f,
                        const ParamInterval& span, const MinimizeOptions& opts) {
  double probe = opts.initial_probe;
  if (std::isnan(probe)) probe = span.default_probe();
  if (!span.contains(probe)) {
    throw NumericError("PROBE_OUTSIDE_THETA",
                       "initial probe lies outside the search interval");
  }

  // Walk downhill until the value rises: (a, b, c) with f(b) lowest.
  double x0 = probe;
  double f0 = eval_finite(f, x0);
  double step = span.bounded() ? 0.125 * (span.hi() - span.lo())
                               : std::max(1.0, 0.5 * std::abs(probe));
  double step_r = step, step_l = step;
  const double xr = advance(x0, span.hi(), step_r);
  const double fr = eval_finite(f, xr);
  double x1, f1, endpoint;
  if (fr < f0) {
    x1 = xr;
    f1 = fr;
    endpoint = span.hi();
  } else {
    const double xl = advance(x0, span.lo(), step_l);
    const double fl = eval_finite(f, xl);
    if (fl < f0) {
      x1 = xl;
      f1 = fl;
      endpoint = span.lo();
    } else {
      // Probe already sits between two higher values.
      return golden_section(f, std::min(xl, xr), std::max(xl, xr), opts);
    }
  }

  double step_out = endpoint == span.hi() ? step_r : step_l;
  double a = x0, c = 0.0;
  bool bracketed = false;
  for (int k = 0; k < opts.max_expansions; ++k) {
    const double x2 = advance(x1, endpoint, step_out);
    if (x2 == x1) break;
    const double f2 = eval_finite(f, x2);
    if (f2 >= f1) {
      c = x2;
      bracketed = true;
      break;
    }
    a = x1;
    x1 = x2;
    f1 = f2;
  }
  if (!bracketed) {
    throw BracketNotFound("no descent-then-ascent pattern found for the "
                          "objective on the search interval");
  }
  return golden_section(f, std::min(a, c), std::max(a, c), opts);
}

std::vector<double> make_uniform_grid(double lo, double hi, int n) {
  if (n < 2 || !(lo < hi)) {
    throw ConfigError("CONFIG_GRID_TOO_SMALL",
                      "grid needs lo < hi and at least two points");
  }
  std::vector<double> g(static_cast<std::size_t>(n));
  const double h = (hi - lo) / (n - 1);
  for (int i = 0; i < n; ++i) g[static_cast<std::size_t>(i)] = lo + i * h;
  g.back() = hi;
  return g;
}

std::vector<double> make_log_grid(double lo, double hi, int n) {
  if (!(lo > 0.0)) {
    throw ConfigError("CONFIG_GRID_OUT_OF_THETA",
                      "log-spaced grid requires lo > 0");
  }
  std::vector<double> g = make_uniform_grid(std::log(lo), std::log(hi), n);
  for (double& t : g) t = std::exp(t);
  g.front() = lo;
  g.back() = hi;
  return g;
}

}  // namespace psikit
