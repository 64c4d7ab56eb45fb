#pragma once

#include "radarfield/optimizer.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <vector>

namespace radarfield {

struct DenseLayer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;
  Eigen::MatrixXd grad_weight;
  Eigen::VectorXd grad_bias;
  Eigen::MatrixXd adam_m_weight, adam_v_weight;
  Eigen::VectorXd adam_m_bias, adam_v_bias;

  DenseLayer(int in, int out);
  int in() const { return static_cast<int>(weight.cols()); }
  int out() const { return static_cast<int>(weight.rows()); }
};

/// Activations recorded by a forward pass. Columns are samples; tangent
/// matrices hold one block of `batch` columns per input direction.
struct MlpCache {
  std::vector<Eigen::MatrixXd> inputs;  // input of each layer
  std::vector<Eigen::MatrixXd> masks;   // ReLU masks of hidden layers (0/1)
  std::vector<Eigen::MatrixXd> tangent_inputs;
  Eigen::Index batch = 0;
  bool has_tangents = false;
  bool pending = false;  // forward recorded, backward not yet run
};

/// Fully connected network: ReLU on hidden layers, identity output.
/// Gradients are exact reverse mode, including through forward-mode tangents
/// (input-space directional derivatives), which is what the SDF normal needs.
class Mlp {
 public:
  Mlp() = default;
  /// sizes = {in, hidden..., out}. Kaiming-uniform fan-in weights, zero biases.
  Mlp(const std::vector<int>& sizes, std::uint64_t seed);

  int input_dim() const { return layers_.front().in(); }
  int output_dim() const { return layers_.back().out(); }
  std::vector<int> sizes() const;
  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& layers() { return layers_; }

  /// X: input_dim x B. Records activations when `cache` is given.
  Eigen::MatrixXd forward(const Eigen::MatrixXd& X, MlpCache* cache) const;
  /// Pushes input tangents (input_dim x k*B) through the linearization recorded
  /// in `cache` and returns output tangents (output_dim x k*B).
  Eigen::MatrixXd forward_tangent(const Eigen::MatrixXd& T, MlpCache& cache) const;
  /// Accumulates parameter gradients for upstream dY (and dTout when tangents
  /// were recorded). Returns dL/dX; writes dL/dT0 when `dT0` is non-null.
  /// With `accumulate` false only the input gradients are produced. Throws
  /// std::logic_error if no forward pass is pending.
  Eigen::MatrixXd backward(const Eigen::MatrixXd& dY, const Eigen::MatrixXd* dTout, MlpCache& cache,
                           Eigen::MatrixXd* dT0 = nullptr, bool accumulate = true);

  void zero_grad();
  void adam_step(const AdamConfig& cfg, long step);

  /// Flat parameter view for checks and serialization: per layer, weight
  /// (column-major) then bias.
  std::size_t parameter_count() const;
  double& parameter(std::size_t i);
  double parameter(std::size_t i) const;
  double gradient(std::size_t i) const;
  bool all_finite() const;

 private:
  std::vector<DenseLayer> layers_;
};

}  // namespace radarfield
