#ifndef TPSEL_TWOPIECE_HPP
#define TPSEL_TWOPIECE_HPP

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

// Two-piece location-scale family with Normal or Laplace base density.
//
// The density glues two rescaled halves of a symmetric base f at the mode mu:
// residuals y - mu < 0 are scaled by sqrt(vartheta)*(1+alpha), residuals
// >= 0 by sqrt(vartheta)*(1-alpha), alpha in (-1,1).  alpha = 0 recovers the
// symmetric base; alpha > 0 puts more mass below the mode.

namespace tpsel {

enum class Base { Normal, Laplace };

struct TwoPieceParams {
  double mu = 0.0;        // location (mode)
  double vartheta = 1.0;  // squared scale, > 0
  double alpha = 0.0;     // asymmetry, in (-1, 1)
  Base base = Base::Normal;

  bool valid() const {
    return std::isfinite(mu) && vartheta > 0.0 && std::isfinite(vartheta) &&
           std::fabs(alpha) < 1.0;
  }
};

namespace detail {
constexpr double kLog2Pi = 1.8378770664093454836;  // log(2*pi)
constexpr double kLog2 = 0.6931471805599453094;

// log of the standard base density at z.
inline double base_logpdf(double z, Base base) {
  if (base == Base::Normal) return -0.5 * kLog2Pi - 0.5 * z * z;
  return -kLog2 - std::fabs(z);
}

// CDF of the standard base at z.
inline double base_cdf(double z, Base base) {
  if (base == Base::Normal) return 0.5 * std::erfc(-z / std::sqrt(2.0));
  return z < 0.0 ? 0.5 * std::exp(z) : 1.0 - 0.5 * std::exp(-z);
}
}  // namespace detail

// Log-density of the two-piece distribution at y.
inline double tp_logpdf(double y, const TwoPieceParams& p) {
  if (!std::isfinite(y)) throw std::domain_error("tp_logpdf: non-finite y");
  if (!p.valid()) throw std::domain_error("tp_logpdf: invalid parameters");
  const double sq = std::sqrt(p.vartheta);
  const double r = y - p.mu;
  const double scale = r < 0.0 ? sq * (1.0 + p.alpha) : sq * (1.0 - p.alpha);
  // normalizing constant 2 / (a(alpha) + b(alpha)) / sqrt(vartheta) = 1/sqrt(vartheta)
  return detail::base_logpdf(r / scale, p.base) - std::log(sq);
}

// CDF of the two-piece distribution at y (continuous at the mode).
inline double tp_cdf(double y, const TwoPieceParams& p) {
  if (!p.valid()) throw std::domain_error("tp_cdf: invalid parameters");
  const double sq = std::sqrt(p.vartheta);
  const double r = y - p.mu;
  if (r < 0.0)
    return (1.0 + p.alpha) * detail::base_cdf(r / (sq * (1.0 + p.alpha)), p.base);
  return p.alpha + (1.0 - p.alpha) * detail::base_cdf(r / (sq * (1.0 - p.alpha)), p.base);
}

// Exact, rejection-free sampler: choose the side with probability
// proportional to its scale, then draw |z| from the half-base density.
inline std::vector<double> tp_sample(std::mt19937_64& rng, std::size_t n,
                                     const TwoPieceParams& p) {
  if (!p.valid()) throw std::domain_error("tp_sample: invalid parameters");
  std::vector<double> out(n);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::exponential_distribution<double> expo(1.0);
  const double sq = std::sqrt(p.vartheta);
  const double p_neg = 0.5 * (1.0 + p.alpha);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = unif(rng);
    const double mag = p.base == Base::Normal ? std::fabs(gauss(rng)) : expo(rng);
    if (u < p_neg)
      out[i] = p.mu - sq * (1.0 + p.alpha) * mag;
    else
      out[i] = p.mu + sq * (1.0 - p.alpha) * mag;
  }
  return out;
}

// Single draw convenience overload.
inline double tp_sample1(std::mt19937_64& rng, const TwoPieceParams& p) {
  return tp_sample(rng, 1, p)[0];
}

struct Moments {
  double mean = 0.0;
  double variance = 0.0;
};

// Closed-form mean and variance.
inline Moments tp_moments(const TwoPieceParams& p) {
  if (!p.valid()) throw std::domain_error("tp_moments: invalid parameters");
  const double sq = std::sqrt(p.vartheta);
  Moments m;
  if (p.base == Base::Normal) {
    m.mean = p.mu - p.alpha * std::sqrt(8.0 * p.vartheta / M_PI);
    m.variance = p.vartheta * ((3.0 - 8.0 / M_PI) * p.alpha * p.alpha + 1.0);
  } else {
    m.mean = p.mu - 2.0 * p.alpha * sq;
    m.variance = 2.0 * p.vartheta * (1.0 + p.alpha * p.alpha);
  }
  return m;
}

}  // namespace tpsel

#endif  // TPSEL_TWOPIECE_HPP
