#pragma once

#include <span>

namespace radarfield {

inline constexpr double kProbabilityClamp = 1e-7;

/// Binary cross-entropy between sigmoid(d_pred / scale) and sigmoid(d_label / scale),
/// with the prediction clamped to [1e-7, 1 - 1e-7].
double sdf_loss(double d_pred, double d_label, double scale);
/// d sdf_loss / d d_pred = (p - q) / scale, zero where the clamp is active.
double sdf_loss_grad(double d_pred, double d_label, double scale);

double intensity_loss(double i_pred, double i_label);
/// Subgradient of |i_pred - i_label|; zero at equality.
double intensity_loss_grad(double i_pred, double i_label);
double mean_intensity_loss(std::span<const double> pred, std::span<const double> label);

}  // namespace radarfield
