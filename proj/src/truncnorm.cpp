#include "spocc/truncnorm.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/special_functions/erf.hpp>

namespace spocc {

namespace {
constexpr int kMaxRejections = 10000;
}

double std_normal_quantile(double prob) { return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * prob); }

double std_normal_above(double lower, Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  if (lower < 0.5) {
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int k = 0; k < kMaxRejections; ++k) {
      const double x = normal(rng);
      if (x > lower) return x;
    }
  } else {
    const double rate = 0.5 * (lower + std::sqrt(lower * lower + 4.0));
    std::exponential_distribution<double> expo(rate);
    for (int k = 0; k < kMaxRejections; ++k) {
      const double x = lower + expo(rng);
      const double d = x - rate;
      if (unif(rng) <= std::exp(-0.5 * d * d)) return x;
    }
  }
  // Inverse CDF on the upper tail: x = -Phi^{-1}(u * Phi(-lower)).
  const double tail = 0.5 * std::erfc(lower / std::numbers::sqrt2);
  double u = unif(rng);
  if (u <= 0.0) u = std::numeric_limits<double>::min();
  if (tail > 0.0) {
    const double x = -std_normal_quantile(u * tail);
    if (std::isfinite(x) && x > lower) return x;
  }
  // beyond double range of the CDF the tail is exponential with rate `lower`
  return lower - std::log(u) / std::max(lower, 1.0);
}

double truncated_normal_positive(double mean, Rng& rng) {
  const double a = mean + std_normal_above(-mean, rng);
  return a > 0.0 ? a : std::numeric_limits<double>::denorm_min();
}

double truncated_normal_nonpositive(double mean, Rng& rng) {
  const double a = mean - std_normal_above(mean, rng);
  return a <= 0.0 ? a : 0.0;
}

double beta_draw(double a, double b, Rng& rng) {
  std::gamma_distribution<double> ga(a, 1.0);
  std::gamma_distribution<double> gb(b, 1.0);
  const double x = ga(rng);
  const double y = gb(rng);
  if (x + y <= 0.0) return a / (a + b);
  return x / (x + y);
}

}  // namespace spocc
