#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <utility>
#include <vector>

#include "psikit/errors.hpp"
#include "psikit/param_interval.hpp"

namespace psikit {

// A psi-function family over an opaque observation type: psi(x, t) changes
// sign from positive to negative in t on theta, for every observation the
// caller intends to use (checked on demand by the bracket search, not here).
//
// d2psi and theta1_closed_form are optional; leave the std::function empty
// when the model has no closed form. `continuous` declares continuity of
// psi(x, .) in t and unlocks accelerated refinement in the solver.
template <class Obs>
struct PsiModel {
  std::function<double(const Obs&, double)> psi;
  std::function<double(const Obs&, double)> d2psi;       // optional
  std::function<double(const Obs&)> theta1_closed_form;  // optional
  ParamInterval theta = ParamInterval::whole_line();
  bool continuous = false;

  bool has_d2psi() const { return static_cast<bool>(d2psi); }
  bool has_theta1_closed_form() const {
    return static_cast<bool>(theta1_closed_form);
  }
};

using RealPsiModel = PsiModel<double>;

// Observations x_1..x_n with nonnegative weights, not all zero.
template <class Obs>
struct WeightedSample {
  std::vector<Obs> observations;
  std::vector<double> weights;

  static WeightedSample equal_weights(std::vector<Obs> obs) {
    WeightedSample s;
    s.weights.assign(obs.size(), 1.0);
    s.observations = std::move(obs);
    return s;
  }

  std::size_t size() const noexcept { return observations.size(); }

  double weight_sum() const {
    double total = 0.0;
    for (double w : weights) total += w;
    return total;
  }

  void validate() const {
    if (observations.empty()) {
      throw InvalidWeights("sample must contain at least one observation");
    }
    if (observations.size() != weights.size()) {
      throw InvalidWeights("observations and weights differ in length");
    }
    bool any_positive = false;
    for (double w : weights) {
      if (!(w >= 0.0) || !std::isfinite(w)) {
        throw InvalidWeights("weights must be finite and nonnegative");
      }
      if (w > 0.0) any_positive = true;
    }
    if (!any_positive) {
      throw InvalidWeights("at least one weight must be positive");
    }
  }
};

using RealWeightedSample = WeightedSample<double>;

}  // namespace psikit
