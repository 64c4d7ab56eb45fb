#pragma once

#include "radarfield/encoding.hpp"
#include "radarfield/feature_grid.hpp"
#include "radarfield/mlp.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace radarfield {

struct NetworkConfig {
  static constexpr int kGeoFeatureDim = 15;

  int sdf_hidden = 64;
  int sdf_layers = 2;
  int intensity_hidden = 64;
  int intensity_layers = 2;
  bool geo_feature = true;        // SDF net emits g and the intensity net consumes it
  bool normals = true;            // intensity net consumes n = grad_x d
  bool sdf_to_intensity = true;   // false: intensity net sees only x and v ("w/o SDF")
  bool intensity_grad_to_sdf = true;

  void validate() const;
};

struct ModelConfig {
  FourierEncodingConfig fourier;
  SphericalHarmonicsConfig sh;
  GridConfig grid;
  NetworkConfig net;

  void validate() const;
};

enum class Ablation { None, NoSdf, NoNormals, NoGeoFeature };
Ablation parse_ablation(const std::string& name);
std::string to_string(Ablation a);
void apply_ablation(ModelConfig& cfg, Ablation a);

struct SdfOutput {
  double d = 0.0;
  std::optional<Eigen::VectorXd> g;
  std::optional<Vec3> n;
};

struct IntensityOutput {
  double i = 0.5;
};

/// Everything a batched forward pass records for its backward pass.
struct ForwardRecord {
  Eigen::Index batch = 0;
  std::vector<Contribution> contributions;  // batch * per-query
  Eigen::MatrixXd sdf_input;       // sdf_input_dim x B
  Eigen::MatrixXd sdf_tangent_in;  // sdf_input_dim x 3B (blocks: d/dx, d/dy, d/dz)
  Eigen::MatrixXd sdf_output;      // sdf_output_dim x B
  Eigen::MatrixXd sdf_tangent_out;
  Eigen::MatrixXd intensity_input;
  Eigen::VectorXd intensity;  // sigmoid output
  MlpCache sdf_cache;
  MlpCache intensity_cache;
  bool sdf_from_network = false;  // false when SDF features were supplied
  bool has_normals = false;
  bool has_intensity = false;
  bool pending = false;

  double d(Eigen::Index j) const { return sdf_output(0, j); }
  Vec3 normal(Eigen::Index j) const;
};

struct ForwardOptions {
  bool intensity = true;
  bool normals = false;  // force normal computation even if the intensity net does not need them
  /// Precomputed SDF-side outputs (rows: d, g..., n...) replacing the SDF network.
  const Eigen::MatrixXd* sdf_features = nullptr;
};

struct BackwardOptions {
  bool sdf = true;        // accumulate SDF-network and feature-grid gradients
  bool intensity = true;  // accumulate intensity-network gradients
};

/// SDF network over tri-quadtree features and a Fourier encoding, plus an
/// intensity network over (x, v, d, g, n). Positions are in world metres; the
/// Fourier encoding sees them mapped into the normalized cube of the scene box.
class RadarField {
 public:
  RadarField() = default;
  RadarField(const Aabb& scene, const ModelConfig& cfg, std::uint64_t seed);
  RadarField(const Aabb& scene, const ModelConfig& cfg, TriQuadtreeGrid grid, Mlp sdf_net, Mlp intensity_net);

  const ModelConfig& config() const { return cfg_; }
  const Aabb& scene() const { return scene_; }
  TriQuadtreeGrid& grid() { return grid_; }
  const TriQuadtreeGrid& grid() const { return grid_; }
  Mlp& sdf_net() { return sdf_net_; }
  const Mlp& sdf_net() const { return sdf_net_; }
  Mlp& intensity_net() { return intensity_net_; }
  const Mlp& intensity_net() const { return intensity_net_; }

  int sdf_input_dim() const { return grid_.output_dim() + cfg_.fourier.output_dim(); }
  int sdf_output_dim() const { return 1 + (emits_geo_feature() ? NetworkConfig::kGeoFeatureDim : 0); }
  int intensity_input_dim() const;
  /// Rows of the SDF-side block fed to the intensity net (d, g, n).
  int sdf_feature_dim() const;
  bool emits_geo_feature() const { return cfg_.net.geo_feature && cfg_.net.sdf_to_intensity; }
  bool intensity_needs_normals() const { return cfg_.net.normals && cfg_.net.sdf_to_intensity; }

  Vec3 normalize(const Vec3& x) const { return (x - center_) / half_extent_; }
  double half_extent() const { return half_extent_; }

  /// Batched forward. `dirs` may be empty when options.intensity is false.
  /// Queries are read-only on the grid; call grid().materialize() beforehand to
  /// allocate training vertices.
  void forward(std::span<const Vec3> x, std::span<const Vec3> dirs, const ForwardOptions& options,
               ForwardRecord& rec) const;
  /// Accumulates gradients for dL/dd and dL/di (either may be empty = zero).
  void backward(ForwardRecord& rec, std::span<const double> dloss_dd, std::span<const double> dloss_di,
                const BackwardOptions& options);

  /// SDF-side intensity inputs (d, g, n rows) for a batch, as consumed by
  /// ForwardOptions::sdf_features.
  Eigen::MatrixXd sdf_features(const ForwardRecord& rec) const;

  SdfOutput sdf_forward(const Vec3& x, bool with_features = true) const;
  IntensityOutput intensity_forward(const Vec3& x, const Vec3& v, const SdfOutput& sdf) const;

  /// Read-only batched evaluation, OpenMP-parallel over fixed-size chunks.
  void evaluate_sdf(std::span<const Vec3> x, std::span<double> d, std::span<Vec3> normals = {}) const;
  void evaluate_intensity(std::span<const Vec3> x, std::span<const Vec3> dirs, std::span<double> out) const;
  /// Same results as the above, single-threaded in one pass; kept for tests and benchmarks.
  void evaluate_sdf_serial(std::span<const Vec3> x, std::span<double> d, std::span<Vec3> normals = {}) const;

  void zero_grad();
  bool all_finite() const;

  static constexpr std::size_t kEvalChunk = 2048;

 private:
  Aabb scene_;
  ModelConfig cfg_;
  Vec3 center_ = Vec3::Zero();
  double half_extent_ = 1.0;
  TriQuadtreeGrid grid_;
  Mlp sdf_net_;
  Mlp intensity_net_;
};

double sigmoid(double z);

}  // namespace radarfield
