#include "psikit/models.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "psikit/errors.hpp"
#include "psikit/kernels.hpp"

namespace psikit {

RealPsiModel NormalVarianceModel::model() const {
  RealPsiModel m_;
  const double mean = m;
  m_.psi = [mean](const double& x, double s) {
    const double d = x - mean;
    return (d * d - s) / (2.0 * s * s);
  };
  m_.d2psi = [mean](const double& x, double s) {
    const double d = x - mean;
    return (s - 2.0 * d * d) / (2.0 * s * s * s);
  };
  m_.theta1_closed_form = [mean](const double& x) {
    const double d = x - mean;
    return d * d;
  };
  m_.theta = ParamInterval::positive_half_line();
  m_.continuous = true;
  return m_;
}

double NormalVarianceModel::theta1(double x) const {
  const double d = x - m;
  return d * d;
}

double NormalVarianceModel::q_star(double s) const { return -2.0 / s; }

double NormalVarianceModel::p(double sigma_sq) const {
  const double r = sigma_sq / sigma0_sq;
  return r * r;
}

double NormalVarianceModel::rho_star(double x, double t) const {
  const double d = t - theta1(x);
  return d * d / (4.0 * sigma0_sq * sigma0_sq);
}

double NormalVarianceModel::nll(double x, double t) const {
  return 0.5 * std::log(t) + theta1(x) / (2.0 * t);
}

double NormalVarianceModel::mle(const RealWeightedSample& sample) const {
  return weighted_mle_oracle(*this, sample);
}

double weighted_mle_oracle(const NormalVarianceModel& model,
                           const RealWeightedSample& sample) {
  sample.validate();
  std::vector<double> terms(sample.size());
  for (std::size_t i = 0; i < sample.size(); ++i) {
    terms[i] = sample.weights[i] * model.theta1(sample.observations[i]);
  }
  const double numer = pairwise_sum(terms, Exec::Serial);
  for (std::size_t i = 0; i < sample.size(); ++i) terms[i] = sample.weights[i];
  const double denom = pairwise_sum(terms, Exec::Serial);
  return numer / denom;
}

double LocationModel::score_value(double u) const {
  if (score == LocationScore::Identity) return u;
  return std::clamp(u, -huber_k, huber_k);
}

double LocationModel::loss(double x, double t) const {
  const double u = x - t;
  if (score == LocationScore::Identity) return 0.5 * u * u;
  const double a = std::abs(u);
  return a <= huber_k ? 0.5 * u * u : huber_k * (a - 0.5 * huber_k);
}

RealPsiModel LocationModel::model() const {
  RealPsiModel m_;
  const LocationModel self = *this;
  m_.psi = [self](const double& x, double t) { return self.score_value(x - t); };
  if (score == LocationScore::Identity) {
    m_.d2psi = [](const double&, double) { return -1.0; };
  }
  // Huber's score has kinks at |x - t| = k, so no d2psi is declared there;
  // finite differences cover the smooth pieces.
  m_.theta1_closed_form = [](const double& x) { return x; };
  m_.theta = ParamInterval::whole_line();
  m_.continuous = true;
  return m_;
}

RealPsiModel WiggleLocationModel::model() const {
  if (!(std::abs(amplitude) < 1.0)) {
    throw ConfigError("CONFIG_BAD_PARAM",
                      "wiggle_location requires |amplitude| < 1");
  }
  RealPsiModel m_;
  const double a = amplitude;
  const double b = frequency;
  m_.psi = [a, b](const double& z, double t) {
    const double u = z - t;
    return u * (1.0 + a * std::sin(b * u));
  };
  m_.d2psi = [a, b](const double& z, double t) {
    const double u = z - t;
    return -(1.0 + a * std::sin(b * u)) - u * a * b * std::cos(b * u);
  };
  m_.theta1_closed_form = [](const double& z) { return z; };
  m_.theta = ParamInterval::whole_line();
  m_.continuous = true;
  return m_;
}

namespace {

double take_param(const std::map<std::string, double>& params,
                  const std::string& key, double fallback) {
  const auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

void reject_unknown(const std::map<std::string, double>& params,
                    const std::set<std::string>& known,
                    const std::string& model_name) {
  for (const auto& [key, value] : params) {
    (void)value;
    if (!known.contains(key)) {
      throw ConfigError("CONFIG_BAD_PARAM", "model '" + model_name +
                                                "' has no parameter '" + key +
                                                "'");
    }
  }
}

}  // namespace

ModelBundle make_model(const std::string& name,
                       const std::map<std::string, double>& params) {
  ModelBundle bundle;
  bundle.name = name;
  if (name == "normal_variance") {
    reject_unknown(params, {"m", "sigma0_sq"}, name);
    NormalVarianceModel nv;
    nv.m = take_param(params, "m", 0.0);
    nv.sigma0_sq = take_param(params, "sigma0_sq", 1.0);
    if (!(nv.sigma0_sq > 0.0)) {
      throw ConfigError("CONFIG_BAD_PARAM", "sigma0_sq must be positive");
    }
    bundle.model = nv.model();
    bundle.rho = [nv](double x, double t) { return nv.nll(x, t); };
  } else if (name == "location") {
    reject_unknown(params, {}, name);
    LocationModel loc;
    bundle.model = loc.model();
    bundle.rho = [loc](double x, double t) { return loc.loss(x, t); };
  } else if (name == "huber") {
    reject_unknown(params, {"k"}, name);
    LocationModel loc;
    loc.score = LocationScore::Huber;
    loc.huber_k = take_param(params, "k", 1.345);
    if (!(loc.huber_k > 0.0)) {
      throw ConfigError("CONFIG_BAD_PARAM", "huber k must be positive");
    }
    bundle.model = loc.model();
    bundle.rho = [loc](double x, double t) { return loc.loss(x, t); };
  } else if (name == "wiggle_location") {
    reject_unknown(params, {"amplitude", "frequency"}, name);
    WiggleLocationModel wig;
    wig.amplitude = take_param(params, "amplitude", 0.9);
    wig.frequency = take_param(params, "frequency", 6.0);
    bundle.model = wig.model();
  } else {
    throw ConfigError("CONFIG_UNKNOWN_MODEL", "unknown model '" + name + "'");
  }
  return bundle;
}

}  // namespace psikit
