#ifndef DIVW_NUMERICS_HPP
#define DIVW_NUMERICS_HPP

#include <cmath>
#include <numbers>
#include <stdexcept>

#include <boost/math/special_functions/erf.hpp>

namespace divw {

/// Neumaier-compensated accumulator. Sums of a few thousand terms agree to
/// well beyond 12 significant digits regardless of term order.
class CompensatedSum {
public:
  CompensatedSum& operator+=(double x) noexcept {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      carry_ += (sum_ - t) + x;
    else
      carry_ += (x - t) + sum_;
    sum_ = t;
    return *this;
  }
  double value() const noexcept { return sum_ + carry_; }

private:
  double sum_ = 0.0;
  double carry_ = 0.0;
};

/// Standard normal CDF through erfc, which keeps full relative precision in
/// the lower tail (Phi(-8) ~ 6e-16 is still exact to ~1 ulp).
inline double normal_cdf(double x) noexcept {
  return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

/// Upper tail 1 - Phi(x) without cancellation.
inline double normal_sf(double x) noexcept { return normal_cdf(-x); }

inline double normal_quantile(double prob) {
  if (!(prob > 0.0 && prob < 1.0))
    throw std::domain_error("normal_quantile: probability must lie in (0, 1)");
  return 0.0 - std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * prob);  // +0 at the median
}

}  // namespace divw

#endif
