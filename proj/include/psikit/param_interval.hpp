#pragma once

#include <cmath>
#include <limits>

#include "psikit/errors.hpp"

namespace psikit {

// Nondegenerate open parameter interval (lo, hi); endpoints may be infinite.
// Membership is strict at both ends.
class ParamInterval {
 public:
  ParamInterval(double lo, double hi) : lo_(lo), hi_(hi) {
    if (std::isnan(lo) || std::isnan(hi) || !(lo < hi)) {
      throw ConfigError("CONFIG_BAD_INTERVAL",
                        "parameter interval requires lo < hi");
    }
  }

  static ParamInterval whole_line() {
    return {-std::numeric_limits<double>::infinity(),
            std::numeric_limits<double>::infinity()};
  }

  static ParamInterval positive_half_line() {
    return {0.0, std::numeric_limits<double>::infinity()};
  }

  double lo() const noexcept { return lo_; }
  double hi() const noexcept { return hi_; }

  bool contains(double t) const noexcept { return lo_ < t && t < hi_; }

  bool bounded() const noexcept {
    return std::isfinite(lo_) && std::isfinite(hi_);
  }

  // Interior point used to seed searches when the caller gives none.
  double default_probe() const noexcept {
    if (bounded()) return 0.5 * (lo_ + hi_);
    if (std::isfinite(lo_)) return lo_ + 1.0;
    if (std::isfinite(hi_)) return hi_ - 1.0;
    return 0.0;
  }

 private:
  double lo_;
  double hi_;
};

}  // namespace psikit
