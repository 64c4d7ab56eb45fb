#pragma once

#include "radarfield/geometry.hpp"
#include "radarfield/hash_table.hpp"
#include "radarfield/optimizer.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace radarfield {

enum class Plane : int { XY = 0, YZ = 1, XZ = 2 };

struct GridConfig {
  double leaf_resolution = 0.2;
  int levels = 3;        // feature-bearing levels (the deepest H of the quadtree)
  int feature_dim = 8;
  bool concat_planes = false;  // default sums the three planes
  double init_range = 1e-4;
  std::uint64_t seed = 0;

  int output_dim() const { return concat_planes ? 3 * feature_dim : feature_dim; }
  void validate() const;
};

/// One interpolation corner: which table/slot, its bilinear weight, and the
/// derivative of that weight with respect to the world-space query point.
struct Contribution {
  std::uint32_t table = 0;
  std::uint32_t slot = SpatialHashTable::kMissing;
  std::uint64_t key = 0;
  double weight = 0.0;
  std::array<double, 3> dweight{};
};

struct FeatureQueryResult {
  Eigen::VectorXd feature;
  std::vector<Contribution> contributions;  // 4 per plane and level
  bool clamped = false;
};

/// Per plane and level: hash index plus flat value/gradient/Adam buffers of
/// `feature_dim` doubles per slot.
struct FeatureTable {
  SpatialHashTable index;
  std::vector<double> values;
  std::vector<double> grad;
  std::vector<double> adam_m;
  std::vector<double> adam_v;
};

/// Tri-quadtree feature encoding. A point is projected onto the XY, YZ and XZ
/// planes; on each plane the H deepest quadtree levels carry hash-stored vertex
/// features that are bilinearly interpolated and summed over levels and planes.
/// Level 0 is the coarsest feature level with cell size leaf * 2^(H-1).
class TriQuadtreeGrid {
 public:
  TriQuadtreeGrid() = default;
  TriQuadtreeGrid(const Aabb& scene, const GridConfig& cfg);

  const GridConfig& config() const { return cfg_; }
  const Aabb& scene() const { return scene_; }
  int output_dim() const { return cfg_.output_dim(); }
  int feature_dim() const { return cfg_.feature_dim; }
  std::size_t table_count() const { return tables_.size(); }
  std::size_t contributions_per_query() const { return tables_.size() * 4; }
  double cell_size(int level) const;
  const FeatureTable& table(std::size_t i) const { return tables_[i]; }
  FeatureTable& table(std::size_t i) { return tables_[i]; }
  static std::size_t table_index(Plane plane, int level, int levels) {
    return static_cast<std::size_t>(plane) * static_cast<std::size_t>(levels) + static_cast<std::size_t>(level);
  }
  Plane plane_of(std::size_t table) const { return static_cast<Plane>(table / static_cast<std::size_t>(cfg_.levels)); }

  /// Read-only query; absent vertices read as zero.
  FeatureQueryResult query(const Vec3& x) const;
  /// Training query; absent vertices are created with their seeded initial value.
  FeatureQueryResult query_train(const Vec3& x);

  /// Low-level form used by the batched model. `contrib` must hold
  /// contributions_per_query() entries; `feature` output_dim() values.
  /// Returns true if x was clamped into the scene box.
  bool locate(const Vec3& x, std::span<Contribution> contrib) const;
  void interpolate(std::span<const Contribution> contrib, std::span<double> feature) const;
  /// d feature / d x_axis for the three world axes, column-major (output_dim x 3).
  void interpolate_jacobian(std::span<const Contribution> contrib, std::span<double> jacobian) const;
  /// Creates every absent vertex referenced by `contrib` and fills in slots.
  void materialize(std::span<Contribution> contrib);
  void materialize(const Vec3& x);

  /// grad[slot] += weight * upstream for each contribution.
  void scatter_gradient(const FeatureQueryResult& result, std::span<const double> upstream);
  /// Adds weight * upstream + sum_k dweight[k] * upstream_jacobian[:, k].
  /// `upstream_jacobian` may be empty.
  void scatter_gradient(std::span<const Contribution> contrib, std::span<const double> upstream,
                        std::span<const double> upstream_jacobian);

  void zero_grad();
  void adam_step(const AdamConfig& cfg, long step);

  std::size_t entry_count() const;
  std::size_t parameter_count() const { return entry_count() * static_cast<std::size_t>(cfg_.feature_dim); }

  /// Initial value of one feature component, a pure function of (seed, table, key, component).
  double initial_value(std::size_t table, std::uint64_t key, int component) const;

  std::vector<std::uint8_t> serialize() const;
  static TriQuadtreeGrid deserialize(std::span<const std::uint8_t> bytes);

  static constexpr std::uint32_t kFormatVersion = 1;

 private:
  std::size_t output_offset(std::size_t table) const;
  std::uint32_t create(std::size_t table, std::uint64_t key);

  Aabb scene_;
  GridConfig cfg_;
  std::vector<FeatureTable> tables_;
};

}  // namespace radarfield
