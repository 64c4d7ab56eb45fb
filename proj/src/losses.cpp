#include "radarfield/losses.hpp"

#include "radarfield/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace radarfield {

namespace {

// ln(sigmoid(z)) without cancellation.
double log_sigmoid(double z) { return z >= 0.0 ? -std::log1p(std::exp(-z)) : z - std::log1p(std::exp(z)); }

}  // namespace

double sdf_loss(double d_pred, double d_label, double scale) {
  const double z = d_pred / scale;
  const double p = sigmoid(z);
  const double q = sigmoid(d_label / scale);
  const double q1 = sigmoid(-d_label / scale);  // 1 - q
  // ln p and ln(1 - p) in log space; the clamp to [1e-7, 1 - 1e-7] is applied there too.
  double lp = log_sigmoid(z), lq = log_sigmoid(-z);
  if (p < kProbabilityClamp) {
    lp = std::log(kProbabilityClamp);
    lq = std::log1p(-kProbabilityClamp);
  } else if (p > 1.0 - kProbabilityClamp) {
    lp = std::log1p(-kProbabilityClamp);
    lq = std::log(kProbabilityClamp);
  }
  return -(q * lp + q1 * lq);
}

double sdf_loss_grad(double d_pred, double d_label, double scale) {
  const double p = sigmoid(d_pred / scale);
  if (p < kProbabilityClamp || p > 1.0 - kProbabilityClamp) return 0.0;
  const double q = sigmoid(d_label / scale);
  return (p - q) / scale;
}

double intensity_loss(double i_pred, double i_label) { return std::abs(i_pred - i_label); }

double intensity_loss_grad(double i_pred, double i_label) {
  if (i_pred > i_label) return 1.0;
  if (i_pred < i_label) return -1.0;
  return 0.0;
}

double mean_intensity_loss(std::span<const double> pred, std::span<const double> label) {
  if (pred.size() != label.size()) throw std::invalid_argument("mean_intensity_loss: size mismatch");
  if (pred.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) sum += intensity_loss(pred[i], label[i]);
  return sum / static_cast<double>(pred.size());
}

}  // namespace radarfield
