#pragma once

#include <span>

namespace radarfield {

struct GammaFit {
  double shape = 0.0;  // k
  double scale = 0.0;  // theta
  double mean = 0.0;      // k * theta
  double variance = 0.0;  // k * theta^2
  double residual = 0.0;  // |ln k - digamma(k) - (ln mean(x) - mean(ln x))|
  int iterations = 0;
  bool converged = false;  // false: method-of-moments fallback was used
};

/// Values at or below this are clamped before taking logarithms.
inline constexpr double kGammaZeroClamp = 1e-9;

/// Maximum-likelihood Gamma(k, theta) fit by Newton iteration on
/// ln k - digamma(k) = ln mean(x) - mean(ln x). Throws std::invalid_argument for
/// fewer than 10 values or negative/non-finite values.
GammaFit gamma_fit(std::span<const double> values);

}  // namespace radarfield
