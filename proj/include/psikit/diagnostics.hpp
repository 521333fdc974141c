#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "psikit/psi_model.hpp"
#include "psikit/representation.hpp"
#include "psikit/solve.hpp"

namespace psikit {

enum class Verdict { Pass, Fail, Vacuous };

std::string to_string(Verdict v);

// A failing check always carries the concrete point(s) reproducing the
// violation: t, optionally a second point s, and the function values seen.
struct Witness {
  double t = 0.0;
  std::optional<double> s;
  std::vector<double> values;
};

struct CheckResult {
  std::string name;
  Verdict verdict = Verdict::Pass;
  std::optional<Witness> witness;
  double tolerance_used = 0.0;
  std::string warning;  // empty when clean
};

struct DiagnosticReport {
  std::vector<CheckResult> checks;

  bool any_fail() const;
  void append(CheckResult r) { checks.push_back(std::move(r)); }
  void append(DiagnosticReport other);
  nlohmann::ordered_json to_json() const;
};

// Monotonicity of the comparison map t -> -psi(x,t)/psi(y,t) on a uniform
// grid strictly inside (theta1(x), theta1(y)). Strict mode wants each step to
// grow by more than 1e-12 * (1 + |value|); steps below that only degrade the
// check to nonstrict and leave a warning. An empty domain is vacuous.
CheckResult check_comparison_monotone(const RealPsiModel& model, double x,
                                      double y, int grid_size = 1024,
                                      bool strict = true,
                                      const SolveOptions& opts = {});

// p(t) psi(z,t) nonincreasing across the grid, skipping one cell around
// theta1(z), and positive left / negative right of it.
CheckResult check_decreasing_product(const RealPsiModel& model,
                                     const MonotoneWeight& weight, double z,
                                     std::span<const double> grid,
                                     double exclusion_radius = 0.0,
                                     const SolveOptions& opts = {});

// Runs estimate() on each sample and probes the sign profile around the
// returned point; solver failures become fail verdicts carrying the error.
DiagnosticReport check_weighted_estimator_family(
    const RealPsiModel& model, const std::vector<RealWeightedSample>& samples,
    const SolveOptions& opts = {});

// Residual of the weighted sum at the estimator: pass when the solver saw a
// zero crossing; a jump is a failure for continuous models and vacuous (with
// a warning) otherwise.
CheckResult check_z_property(const RealPsiModel& model,
                             const RealWeightedSample& sample,
                             const SolveOptions& opts = {});

}  // namespace psikit
