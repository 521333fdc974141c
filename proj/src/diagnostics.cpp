#include "psikit/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "psikit/errors.hpp"
#include "psikit/kernels.hpp"

namespace psikit {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

nlohmann::ordered_json witness_json(const Witness& w) {
  nlohmann::ordered_json j;
  j["t"] = w.t;
  if (w.s) j["s"] = *w.s;
  j["values"] = w.values;
  return j;
}

double theta1_value(const RealPsiModel& model, double z,
                    const SolveOptions& opts) {
  if (model.has_theta1_closed_form()) return model.theta1_closed_form(z);
  return theta1(model, z, opts).theta;
}

}  // namespace

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::Pass:
      return "pass";
    case Verdict::Fail:
      return "fail";
    case Verdict::Vacuous:
      return "vacuous";
  }
  return "unknown";
}

bool DiagnosticReport::any_fail() const {
  return std::any_of(checks.begin(), checks.end(), [](const CheckResult& c) {
    return c.verdict == Verdict::Fail;
  });
}

void DiagnosticReport::append(DiagnosticReport other) {
  for (auto& c : other.checks) checks.push_back(std::move(c));
}

nlohmann::ordered_json DiagnosticReport::to_json() const {
  nlohmann::ordered_json out;
  out["checks"] = nlohmann::ordered_json::array();
  int pass = 0, fail = 0, vacuous = 0;
  for (const CheckResult& c : checks) {
    nlohmann::ordered_json j;
    j["name"] = c.name;
    j["verdict"] = to_string(c.verdict);
    j["witness"] = c.witness ? witness_json(*c.witness)
                             : nlohmann::ordered_json(nullptr);
    j["tolerance_used"] = c.tolerance_used;
    if (!c.warning.empty()) j["warning"] = c.warning;
    out["checks"].push_back(std::move(j));
    switch (c.verdict) {
      case Verdict::Pass:
        ++pass;
        break;
      case Verdict::Fail:
        ++fail;
        break;
      case Verdict::Vacuous:
        ++vacuous;
        break;
    }
  }
  out["summary"] = {{"pass", pass}, {"fail", fail}, {"vacuous", vacuous}};
  return out;
}

CheckResult check_comparison_monotone(const RealPsiModel& model, double x,
                                      double y, int grid_size, bool strict,
                                      const SolveOptions& opts) {
  CheckResult result;
  result.name = "comparison_monotone";
  result.tolerance_used = 1e-12;

  ComparisonFunction cf;
  try {
    cf = comparison_function(model, x, y, opts);
  } catch (const DomainEmpty&) {
    result.verdict = Verdict::Vacuous;
    result.warning = "empty comparison domain";
    return result;
  }

  const double lo = cf.domain_lo;
  const double hi = cf.domain_hi;
  std::vector<double> ts(static_cast<std::size_t>(grid_size));
  for (int i = 0; i < grid_size; ++i) {
    ts[static_cast<std::size_t>(i)] =
        lo + (hi - lo) * (i + 1) / (grid_size + 1.0);
  }
  // NaN marks a tripped division guard; sorted out serially below.
  std::vector<double> values = grid_map(
      ts,
      [&](double t) {
        const double num = model.psi(x, t);
        const double den = model.psi(y, t);
        if (std::abs(den) <= 1e-13 * (1.0 + std::abs(num))) return kNaN;
        return -num / den;
      },
      default_exec());

  int degraded = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (std::isnan(values[i])) {
      result.verdict = Verdict::Fail;
      result.warning = "DIVISION_NEAR_ZERO inside the domain";
      result.witness = Witness{ts[i], std::nullopt, {}};
      return result;
    }
    if (i == 0) continue;
    const double prev = values[i - 1];
    const double cur = values[i];
    const double tol = 1e-12 * (1.0 + std::abs(prev));
    if (cur < prev - tol) {
      result.verdict = Verdict::Fail;
      result.witness = Witness{ts[i - 1], ts[i], {prev, cur}};
      return result;
    }
    if (strict && cur - prev <= tol) ++degraded;
  }
  result.verdict = Verdict::Pass;
  if (degraded > 0) {
    result.warning = "strictness degraded to nonstrict at " +
                     std::to_string(degraded) + " grid cells";
  }
  return result;
}

CheckResult check_decreasing_product(const RealPsiModel& model,
                                     const MonotoneWeight& weight, double z,
                                     std::span<const double> grid,
                                     double exclusion_radius,
                                     const SolveOptions& opts) {
  CheckResult result;
  result.name = "decreasing_product";

  const double th1 = theta1_value(model, z, opts);
  const double excl = exclusion_radius > 0.0
                          ? exclusion_radius
                          : 1e-4 * (1.0 + std::abs(th1));

  std::vector<double> values = grid_map(
      grid, [&](double t) { return weight.p_at(t) * model.psi(z, t); },
      default_exec());

  double scale = 0.0;
  for (double v : values) scale = std::max(scale, std::abs(v));
  // The relative term absorbs weight-construction quadrature noise, which
  // matters when z itself attains the family envelope (zero sandwich margin,
  // the product is constant there in exact arithmetic).
  const double tol = 1e-9 * (1.0 + scale);
  result.tolerance_used = tol;

  auto excluded = [&](double t) { return std::abs(t - th1) <= excl; };

  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (excluded(grid[i])) continue;
    // Sign profile: positive strictly left of theta1(z), negative right.
    if (grid[i] < th1 && !(values[i] > 0.0)) {
      result.verdict = Verdict::Fail;
      result.witness = Witness{grid[i], std::nullopt, {values[i]}};
      return result;
    }
    if (grid[i] > th1 && !(values[i] < 0.0)) {
      result.verdict = Verdict::Fail;
      result.witness = Witness{grid[i], std::nullopt, {values[i]}};
      return result;
    }
    if (i == 0) continue;
    // Skip the cell spanning theta1(z) or touching its exclusion zone.
    if (excluded(grid[i - 1]) || (grid[i - 1] < th1 && th1 < grid[i])) continue;
    const double slack =
        tol + 1e-5 * (std::abs(values[i - 1]) + std::abs(values[i]));
    if (values[i] > values[i - 1] + slack) {
      result.verdict = Verdict::Fail;
      result.witness = Witness{grid[i - 1], grid[i],
                               {values[i - 1], values[i]}};
      return result;
    }
  }
  result.verdict = Verdict::Pass;
  return result;
}

DiagnosticReport check_weighted_estimator_family(
    const RealPsiModel& model, const std::vector<RealWeightedSample>& samples,
    const SolveOptions& opts) {
  DiagnosticReport report;
  for (std::size_t s = 0; s < samples.size(); ++s) {
    CheckResult result;
    result.name = "weighted_estimator/sample_" + std::to_string(s);
    result.tolerance_used = opts.tolerance;
    try {
      const RealWeightedSample& sample = samples[s];
      const SignChangeResult r = estimate(model, sample, opts);

      std::vector<double> terms(sample.size());
      auto objective = [&](double t) {
        for (std::size_t i = 0; i < sample.size(); ++i) {
          terms[i] = sample.weights[i] * model.psi(sample.observations[i], t);
        }
        return pairwise_sum(terms, Exec::Serial);
      };

      const double delta = 0.05 * (1.0 + std::abs(r.theta));
      bool ok = true;
      for (int k = 1; k <= 8 && ok; ++k) {
        const double left = r.theta - k * delta;
        if (model.theta.contains(left) && left < r.bracket_lo) {
          const double v = objective(left);
          if (!(v > 0.0)) {
            result.verdict = Verdict::Fail;
            result.witness = Witness{left, std::nullopt, {v}};
            ok = false;
            break;
          }
        }
        const double right = r.theta + k * delta;
        if (model.theta.contains(right) && right > r.bracket_hi) {
          const double v = objective(right);
          if (!(v < 0.0)) {
            result.verdict = Verdict::Fail;
            result.witness = Witness{right, std::nullopt, {v}};
            ok = false;
            break;
          }
        }
      }
      if (ok) result.verdict = Verdict::Pass;
    } catch (const Error& e) {
      result.verdict = Verdict::Fail;
      result.warning = e.code();
    }
    report.append(std::move(result));
  }
  return report;
}

CheckResult check_z_property(const RealPsiModel& model,
                             const RealWeightedSample& sample,
                             const SolveOptions& opts) {
  CheckResult result;
  result.name = "z_property";
  try {
    const SignChangeResult r = estimate(model, sample, opts);
    result.tolerance_used = opts.residual_tolerance * r.scale;
    if (r.crossing == Crossing::ZeroCrossing) {
      result.verdict = Verdict::Pass;
    } else if (model.continuous) {
      result.verdict = Verdict::Fail;
      result.witness = Witness{r.theta, std::nullopt, {r.residual}};
    } else {
      result.verdict = Verdict::Vacuous;
      result.warning = "JumpCrossing";
      result.witness = Witness{r.theta, std::nullopt, {r.residual}};
    }
  } catch (const Error& e) {
    result.verdict = Verdict::Fail;
    result.warning = e.code();
  }
  return result;
}

}  // namespace psikit
