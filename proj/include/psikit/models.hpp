#pragma once

#include <functional>
#include <map>
#include <string>

#include "psikit/psi_model.hpp"

namespace psikit {

// Variance estimation for a normal sample with known mean m:
// psi(x, s) = ((x - m)^2 - s) / (2 s^2) on theta = (0, inf). sigma0_sq anchors
// the closed-form weight p. All the closed forms below are exact companions
// of this family, used as oracles and reference curves.
struct NormalVarianceModel {
  double m = 0.0;
  double sigma0_sq = 1.0;

  RealPsiModel model() const;

  double theta1(double x) const;           // (x - m)^2
  double q_star(double s) const;           // -2 / s
  double p(double sigma_sq) const;         // (sigma_sq / sigma0_sq)^2
  double rho_star(double x, double t) const;  // (t - (x-m)^2)^2 / (4 sigma0_sq^2)
  double nll(double x, double t) const;       // log(t)/2 + (x-m)^2 / (2 t)
  double mle(const RealWeightedSample& sample) const;
};

// Exact weighted estimator sum_i w_i (x_i - m)^2 / sum_i w_i; the ground
// truth the numeric solver is tested against.
double weighted_mle_oracle(const NormalVarianceModel& model,
                           const RealWeightedSample& sample);

enum class LocationScore { Identity, Huber };

// Location families psi(x, t) = g(x - t) with an odd nondecreasing score g.
// Identity gives the weighted mean; Huber clamps at +-k.
struct LocationModel {
  LocationScore score = LocationScore::Identity;
  double huber_k = 1.345;

  RealPsiModel model() const;
  double score_value(double u) const;
  // rho with psi = -d/dt rho: u^2/2 for identity, the Huber loss otherwise.
  double loss(double x, double t) const;
};

// Deliberately ill-behaved location family
//   psi(z, t) = (z - t) * (1 + amplitude * sin(frequency * (z - t))).
// The oscillating factor stays positive, so the sign structure and
// theta1(z) = z survive, but the comparison map between two observations is
// not monotone once amplitude is close to 1 and frequency is large. Serves
// as the counterexample fixture for the diagnostics.
struct WiggleLocationModel {
  double amplitude = 0.9;
  double frequency = 6.0;

  RealPsiModel model() const;
};

// Everything the CLI needs to drive one named model.
struct ModelBundle {
  RealPsiModel model;
  // Original per-observation loss rho(x, t) with psi = -d/dt rho, when the
  // family has one in closed form; empty otherwise.
  std::function<double(double, double)> rho;
  std::string name;
};

// Models addressable by name + parameter map:
//   normal_variance(m, sigma0_sq), location(), huber(k),
//   wiggle_location(amplitude, frequency).
// Unknown names or parameters raise ConfigError.
ModelBundle make_model(const std::string& name,
                       const std::map<std::string, double>& params);

}  // namespace psikit
