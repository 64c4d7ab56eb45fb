#include "radarfield/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace radarfield {

Pose::Pose(const Quat& q, const Vec3& t) : rotation(q), translation(t) {
  // Already-unit quaternions are kept bit-for-bit so text round trips stay exact.
  if (std::abs(q.norm() - 1.0) > 1e-12) rotation.normalize();
}

Pose Pose::inverse() const {
  Quat inv = rotation.conjugate();
  return Pose(inv, -(inv * translation));
}

Pose Pose::operator*(const Pose& other) const {
  return Pose(rotation * other.rotation, rotation * other.translation + translation);
}

Aabb::Aabb(const Vec3& lo, const Vec3& hi) : min(lo), max(hi) {
  if (!valid()) throw std::invalid_argument("Aabb: min must not exceed max");
}

Aabb Aabb::empty() {
  Aabb box;
  box.min = Vec3::Constant(std::numeric_limits<double>::infinity());
  box.max = Vec3::Constant(-std::numeric_limits<double>::infinity());
  return box;
}

Aabb Aabb::bounding(std::span<const Vec3> points) {
  Aabb box = empty();
  for (const auto& p : points) box.expand(p);
  return box;
}

void Aabb::expand(const Vec3& p) {
  min = min.cwiseMin(p);
  max = max.cwiseMax(p);
}

Aabb Aabb::padded(double margin) const {
  Aabb box;
  box.min = min.array() - margin;
  box.max = max.array() + margin;
  return box;
}

Vec3 PointCloudFrame::origin(std::size_t i) const {
  if (!origins.empty()) return origins[i];
  return in_world() ? sensor_pose.translation : Vec3::Zero();
}

void PointCloudFrame::validate() const {
  if (points.size() != intensities.size())
    throw std::invalid_argument("PointCloudFrame: points and intensities differ in length");
  if (!origins.empty() && origins.size() != points.size())
    throw std::invalid_argument("PointCloudFrame: origins and points differ in length");
}

InvalidFrameError::InvalidFrameError(std::string what, std::vector<InvalidPoint> bad)
    : std::runtime_error(std::move(what)), bad_(std::move(bad)) {}

PointCloudFrame transform_to_world(const PointCloudFrame& frame) {
  frame.validate();
  std::vector<InvalidPoint> bad;
  for (std::size_t i = 0; i < frame.points.size(); ++i) {
    if (!frame.points[i].allFinite()) bad.push_back({i, "non-finite coordinate"});
  }
  if (!bad.empty())
    throw InvalidFrameError("transform_to_world: " + std::to_string(bad.size()) + " invalid point(s)",
                            std::move(bad));

  PointCloudFrame out;
  out.timestamp = frame.timestamp;
  out.intensities = frame.intensities;
  out.points.reserve(frame.size());
  out.origins.reserve(frame.size());
  const Pose& pose = frame.sensor_pose;
  for (std::size_t i = 0; i < frame.size(); ++i) {
    out.points.push_back(pose.apply(frame.points[i]));
    out.origins.push_back(frame.origins.empty() ? pose.translation : pose.apply(frame.origins[i]));
  }
  return out;
}

PointCloudFrame near_field_filter(const PointCloudFrame& frame, double radius) {
  if (!(radius > 0.0)) throw std::invalid_argument("near_field_filter: radius must be positive");
  frame.validate();
  PointCloudFrame out;
  out.timestamp = frame.timestamp;
  out.sensor_pose = frame.sensor_pose;
  for (std::size_t i = 0; i < frame.size(); ++i) {
    const double range = (frame.points[i] - frame.origin(i)).norm();
    if (range > radius) {
      out.points.push_back(frame.points[i]);
      out.intensities.push_back(frame.intensities[i]);
      if (!frame.origins.empty()) out.origins.push_back(frame.origins[i]);
    }
  }
  return out;
}

namespace {

PointCloudFrame merge(std::span<const PointCloudFrame> group) {
  PointCloudFrame merged;
  merged.timestamp = group.front().timestamp;
  for (const auto& f : group) {
    const PointCloudFrame world = f.origins.empty() && !f.points.empty() ? transform_to_world(f) : f;
    merged.points.insert(merged.points.end(), world.points.begin(), world.points.end());
    merged.intensities.insert(merged.intensities.end(), world.intensities.begin(), world.intensities.end());
    merged.origins.insert(merged.origins.end(), world.origins.begin(), world.origins.end());
  }
  return merged;
}

}  // namespace

std::vector<PointCloudFrame> accumulate_frames(std::span<const PointCloudFrame> frames, std::size_t k,
                                               bool overlap) {
  if (k == 0) throw std::invalid_argument("accumulate_frames: k must be >= 1");
  std::vector<PointCloudFrame> out;
  if (frames.empty()) return out;
  if (k > frames.size()) {
    out.push_back(merge(frames));
    return out;
  }
  if (overlap) {
    for (std::size_t start = 0; start + k <= frames.size(); ++start) out.push_back(merge(frames.subspan(start, k)));
    return out;
  }
  for (std::size_t start = 0; start < frames.size(); start += k) {
    const std::size_t n = std::min(k, frames.size() - start);
    out.push_back(merge(frames.subspan(start, n)));
  }
  return out;
}

double IntensityRange::normalize(double raw) const {
  return std::clamp((raw - min) / (max - min), 0.0, 1.0);
}

IntensityRange intensity_range(std::span<const PointCloudFrame> frames) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const auto& f : frames)
    for (double i : f.intensities) {
      lo = std::min(lo, i);
      hi = std::max(hi, i);
    }
  if (!std::isfinite(lo)) throw std::invalid_argument("intensity_range: no intensities");
  IntensityRange range{std::floor(lo), std::ceil(hi)};
  if (range.max <= range.min) range.max = range.min + 1.0;
  return range;
}

std::vector<PointCloudFrame> normalize_intensities(std::span<const PointCloudFrame> frames,
                                                   const IntensityRange& range) {
  if (!(range.min < range.max)) throw std::invalid_argument("normalize_intensities: i_min must be < i_max");
  std::vector<PointCloudFrame> out(frames.begin(), frames.end());
  for (auto& f : out)
    for (double& i : f.intensities) i = range.normalize(i);
  return out;
}

}  // namespace radarfield
