#include "radarfield/gamma_fit.hpp"

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>

#include <algorithm>
#include <cmath>
#include <iostream>
#include <stdexcept>

namespace radarfield {

GammaFit gamma_fit(std::span<const double> values) {
  if (values.size() < 10) throw std::invalid_argument("gamma_fit: need at least 10 values");
  double sum = 0.0, sum_log = 0.0, sum_sq = 0.0;
  for (double v : values) {
    if (!std::isfinite(v) || v < 0.0) throw std::invalid_argument("gamma_fit: values must be finite and >= 0");
    const double x = std::max(v, kGammaZeroClamp);
    sum += x;
    sum_sq += x * x;
    sum_log += std::log(x);
  }
  const double n = static_cast<double>(values.size());
  const double mean = sum / n;
  const double s = std::log(mean) - sum_log / n;

  GammaFit fit;
  auto finish = [&](double k) {
    fit.shape = k;
    fit.scale = mean / k;
    fit.mean = k * fit.scale;
    fit.variance = k * fit.scale * fit.scale;
    fit.residual = std::abs(std::log(k) - boost::math::digamma(k) - s);
    return fit;
  };

  if (s > 0.0 && std::isfinite(s)) {
    double k = (3.0 - s + std::sqrt((s - 3.0) * (s - 3.0) + 24.0 * s)) / (12.0 * s);
    for (int it = 1; it <= 100; ++it) {
      const double f = std::log(k) - boost::math::digamma(k) - s;
      const double df = 1.0 / k - boost::math::trigamma(k);
      double next = k - f / df;
      if (!(next > 0.0)) next = 0.5 * k;
      const bool done = std::abs(next - k) <= 1e-14 * k;
      k = next;
      fit.iterations = it;
      if (done) {
        fit.converged = true;
        break;
      }
    }
    if (fit.converged) return finish(k);
  }

  std::cerr << "warning: gamma_fit did not converge; using method of moments\n";
  const double var = std::max(sum_sq / n - mean * mean, 1e-300);
  fit.converged = false;
  return finish(mean * mean / var);
}

}  // namespace radarfield
