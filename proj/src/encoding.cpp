#include "radarfield/encoding.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace radarfield {

void FourierEncodingConfig::validate() const {
  if (num_frequencies < 1) throw std::invalid_argument("fourier encoding: num_frequencies must be >= 1");
  if (!(base_frequency > 0.0)) throw std::invalid_argument("fourier encoding: base_frequency must be positive");
}

void fourier_encode(const Vec3& x, const FourierEncodingConfig& cfg, std::span<double> out) {
  std::size_t k = 0;
  if (cfg.include_input)
    for (int a = 0; a < 3; ++a) out[k++] = x[a];
  for (int a = 0; a < 3; ++a) {
    double freq = std::numbers::pi * cfg.base_frequency;
    for (int j = 0; j < cfg.num_frequencies; ++j, freq *= 2.0) {
      out[k++] = std::sin(freq * x[a]);
      out[k++] = std::cos(freq * x[a]);
    }
  }
}

void fourier_encode_derivative(const Vec3& x, const FourierEncodingConfig& cfg, std::span<double> dout,
                               std::span<int> axis) {
  std::size_t k = 0;
  if (cfg.include_input)
    for (int a = 0; a < 3; ++a) {
      dout[k] = 1.0;
      axis[k++] = a;
    }
  for (int a = 0; a < 3; ++a) {
    double freq = std::numbers::pi * cfg.base_frequency;
    for (int j = 0; j < cfg.num_frequencies; ++j, freq *= 2.0) {
      dout[k] = freq * std::cos(freq * x[a]);
      axis[k++] = a;
      dout[k] = -freq * std::sin(freq * x[a]);
      axis[k++] = a;
    }
  }
}

Eigen::VectorXd fourier_encode(const Vec3& x, const FourierEncodingConfig& cfg) {
  Eigen::VectorXd out(cfg.output_dim());
  fourier_encode(x, cfg, {out.data(), static_cast<std::size_t>(out.size())});
  return out;
}

void SphericalHarmonicsConfig::validate() const {
  if (degree < 1 || degree > 4)
    throw std::invalid_argument("spherical harmonics: degree must be in [1, 4], got " + std::to_string(degree));
}

void sh_encode(const Vec3& v, const SphericalHarmonicsConfig& cfg, std::span<double> out) {
  const double norm = v.norm();
  if (!(std::abs(norm - 1.0) <= 1e-3))
    throw std::invalid_argument("sh_encode: direction is not unit length (|v| = " + std::to_string(norm) + ")");
  const Vec3 u = v / norm;
  const double x = u.x(), y = u.y(), z = u.z();

  out[0] = 0.28209479177387814;
  if (cfg.degree <= 1) return;
  out[1] = -0.48860251190291992 * y;
  out[2] = 0.48860251190291992 * z;
  out[3] = -0.48860251190291992 * x;
  if (cfg.degree <= 2) return;
  const double xx = x * x, yy = y * y, zz = z * z;
  out[4] = 1.0925484305920792 * x * y;
  out[5] = -1.0925484305920792 * y * z;
  out[6] = 0.31539156525252005 * (3.0 * zz - 1.0);
  out[7] = -1.0925484305920792 * x * z;
  out[8] = 0.54627421529603959 * (xx - yy);
  if (cfg.degree <= 3) return;
  out[9] = -0.59004358992664352 * y * (3.0 * xx - yy);
  out[10] = 2.8906114426405538 * x * y * z;
  out[11] = -0.45704579946446572 * y * (5.0 * zz - 1.0);
  out[12] = 0.3731763325901154 * z * (5.0 * zz - 3.0);
  out[13] = -0.45704579946446572 * x * (5.0 * zz - 1.0);
  out[14] = 1.4453057213202769 * z * (xx - yy);
  out[15] = -0.59004358992664352 * x * (xx - 3.0 * yy);
}

Eigen::VectorXd sh_encode(const Vec3& v, const SphericalHarmonicsConfig& cfg) {
  cfg.validate();
  Eigen::VectorXd out(cfg.output_dim());
  sh_encode(v, cfg, {out.data(), static_cast<std::size_t>(out.size())});
  return out;
}

}  // namespace radarfield
