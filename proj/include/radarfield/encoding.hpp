#pragma once

#include "radarfield/geometry.hpp"

#include <span>

namespace radarfield {

struct FourierEncodingConfig {
  int num_frequencies = 6;
  double base_frequency = 1.0;
  bool include_input = true;

  int output_dim() const { return 6 * num_frequencies + (include_input ? 3 : 0); }
  void validate() const;
};

/// Layout: [x y z] (optional), then per axis a and octave j: sin, cos of
/// 2^j * pi * base * x_a. Inputs are expected in the normalized cube [-1,1]^3.
void fourier_encode(const Vec3& x, const FourierEncodingConfig& cfg, std::span<double> out);
/// Diagonal Jacobian: d out[k] / d x_axis(k). `axis` receives the input axis of each slot.
void fourier_encode_derivative(const Vec3& x, const FourierEncodingConfig& cfg, std::span<double> dout,
                               std::span<int> axis);
Eigen::VectorXd fourier_encode(const Vec3& x, const FourierEncodingConfig& cfg);

struct SphericalHarmonicsConfig {
  int degree = 4;  // bands 0..degree-1, supported up to 4

  int output_dim() const { return degree * degree; }
  void validate() const;
};

/// Real orthonormal spherical harmonics in Cartesian polynomial form. Band 1 is
/// c * (-y, z, -x) with c = sqrt(3 / (4 pi)) (Condon-Shortley phase included).
/// Directions within 1e-3 of unit length are renormalized; others throw.
void sh_encode(const Vec3& v, const SphericalHarmonicsConfig& cfg, std::span<double> out);
Eigen::VectorXd sh_encode(const Vec3& v, const SphericalHarmonicsConfig& cfg);

}  // namespace radarfield
