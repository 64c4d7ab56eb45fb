#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace radarfield {

using Vec3 = Eigen::Vector3d;
using Quat = Eigen::Quaterniond;

/// Rigid transform sensor -> world. The rotation is kept normalized.
struct Pose {
  Quat rotation = Quat::Identity();
  Vec3 translation = Vec3::Zero();

  Pose() = default;
  Pose(const Quat& q, const Vec3& t);

  static Pose identity() { return {}; }

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
  Pose inverse() const;
  Pose operator*(const Pose& other) const;
};

struct Aabb {
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Zero();

  Aabb() = default;
  Aabb(const Vec3& lo, const Vec3& hi);

  static Aabb empty();
  static Aabb bounding(std::span<const Vec3> points);

  bool valid() const { return (min.array() <= max.array()).all(); }
  bool contains(const Vec3& p) const {
    return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
  }
  Vec3 extent() const { return max - min; }
  Vec3 center() const { return 0.5 * (min + max); }
  void expand(const Vec3& p);
  Aabb padded(double margin) const;
  Vec3 clamp(const Vec3& p) const { return p.cwiseMax(min).cwiseMin(max); }
};

/// One radar sweep. Points are in the sensor frame unless the frame has been
/// moved to world coordinates, in which case `origins` holds the per-point ray
/// origin (the emitting sensor position) and `sensor_pose` is the identity.
struct PointCloudFrame {
  double timestamp = 0.0;
  Pose sensor_pose;
  std::vector<Vec3> points;
  std::vector<double> intensities;
  std::vector<Vec3> origins;

  std::size_t size() const { return points.size(); }
  bool in_world() const { return !origins.empty() || points.empty(); }
  /// Ray origin of point `i` in the frame's coordinate system.
  Vec3 origin(std::size_t i) const;
  void validate() const;
};

struct InvalidPoint {
  std::size_t index;
  std::string reason;
};

class InvalidFrameError : public std::runtime_error {
 public:
  InvalidFrameError(std::string what, std::vector<InvalidPoint> bad);
  const std::vector<InvalidPoint>& points() const { return bad_; }

 private:
  std::vector<InvalidPoint> bad_;
};

/// Moves sensor-frame points to world coordinates. Throws InvalidFrameError
/// listing every non-finite point.
PointCloudFrame transform_to_world(const PointCloudFrame& frame);

/// Keeps points whose sensor range is strictly greater than `radius`.
PointCloudFrame near_field_filter(const PointCloudFrame& frame, double radius);

/// Merges groups of `k` consecutive frames into world-frame clouds. With
/// `overlap` each window starts one frame after the previous one, otherwise
/// windows are disjoint and a trailing partial group is kept.
std::vector<PointCloudFrame> accumulate_frames(std::span<const PointCloudFrame> frames,
                                               std::size_t k, bool overlap = false);

struct IntensityRange {
  double min = 0.0;
  double max = 1.0;

  double normalize(double raw) const;
  double denormalize(double unit) const { return min + unit * (max - min); }
};

/// Rounded dataset-wide range of raw intensities.
IntensityRange intensity_range(std::span<const PointCloudFrame> frames);

std::vector<PointCloudFrame> normalize_intensities(std::span<const PointCloudFrame> frames,
                                                   const IntensityRange& range);

}  // namespace radarfield
