#pragma once

#include "radarfield/mesh.hpp"
#include "radarfield/model.hpp"

#include <functional>
#include <span>

namespace radarfield {

struct VoxelGridSpec {
  Aabb aabb;
  double voxel_size = 0.1;
  double mask_radius = 0.5;  // <= 0 disables masking

  void validate() const;
  /// ceil(extent / voxel_size) per axis.
  std::array<long, 3> dims() const;
};

/// Signed distance source for the mesher.
class SdfField {
 public:
  virtual ~SdfField() = default;
  /// Fills `d`; fills `gradients` as well when it is non-empty.
  virtual void evaluate(std::span<const Vec3> x, std::span<double> d, std::span<Vec3> gradients) const = 0;
};

class ModelSdfField final : public SdfField {
 public:
  explicit ModelSdfField(const RadarField& model, bool parallel = true) : model_(model), parallel_(parallel) {}
  void evaluate(std::span<const Vec3> x, std::span<double> d, std::span<Vec3> gradients) const override;

 private:
  const RadarField& model_;
  bool parallel_;
};

/// Wraps a pointwise function; without an explicit gradient, central
/// differences with step 1e-6 are used.
class FunctionSdfField final : public SdfField {
 public:
  using Value = std::function<double(const Vec3&)>;
  using Gradient = std::function<Vec3(const Vec3&)>;
  explicit FunctionSdfField(Value value, Gradient gradient = {})
      : value_(std::move(value)), gradient_(std::move(gradient)) {}
  void evaluate(std::span<const Vec3> x, std::span<double> d, std::span<Vec3> gradients) const override;

 private:
  Value value_;
  Gradient gradient_;
};

struct MeshingStats {
  std::size_t active_cells = 0;
  std::size_t evaluated_corners = 0;
  std::size_t welded_vertices = 0;
  std::size_t removed_degenerate = 0;
};

/// Marching cubes over the cells of `spec` whose centre lies within mask_radius of some
/// point in `mask_points` (all cells when `mask_points` is empty or masking is
/// off). Vertex normals are the normalized SDF gradient, pointing to the
/// positive side.
TriangleMesh extract_mesh(const SdfField& field, const VoxelGridSpec& spec, std::span<const Vec3> mask_points = {},
                          MeshingStats* stats = nullptr);

struct ViewPolicy {
  enum class Kind { Fixed, Normal, TowardSensor };
  Kind kind = Kind::Normal;
  Vec3 direction = Vec3::UnitX();  // Fixed: viewing direction (sensor -> point)
  Vec3 sensor = Vec3::Zero();      // TowardSensor: sensor position

  /// Viewing direction used to query a vertex, in the sensor -> point sense
  /// the intensity network is trained with.
  Vec3 view_dir(const Vec3& vertex, const Vec3& normal) const;
};

using IntensityQuery = std::function<void(std::span<const Vec3> x, std::span<const Vec3> v, std::span<double> out)>;

void attach_intensity(TriangleMesh& mesh, const IntensityQuery& query, const ViewPolicy& policy);
/// Queries the model and stores normalized intensities in [0, 1].
void attach_intensity(TriangleMesh& mesh, const RadarField& model, const ViewPolicy& policy);

}  // namespace radarfield
