#pragma once

#include "radarfield/geometry.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace radarfield::synth {

struct Primitive {
  enum class Kind { Plane, Sphere, Box, CornerReflector };
  Kind kind = Kind::Plane;
  Vec3 center = Vec3::Zero();       // plane: a point on the plane
  Vec3 normal = Vec3::UnitZ();      // plane normal (positive side); reflector axis
  double radius = 1.0;              // sphere, reflector body
  Vec3 half_extents = Vec3::Ones();  // box (axis aligned)
  double reflectivity = 0.5;        // rho in (0, 1]
  double exponent = 1.0;            // p in cos^p
  double spike_gain = 0.0;          // reflector: extra cross-section factor inside the aperture
  double aperture = 0.7;            // reflector: half-angle in radians

  double sdf(const Vec3& x) const;
  Vec3 gradient(const Vec3& x) const;
  /// Cross-section per unit patch area for viewing direction v (sensor -> point)
  /// at surface normal n.
  double cross_section(const Vec3& v, const Vec3& n) const;
};

/// Positive on the side the sensor sits on, negative inside/behind.
struct AnalyticScene {
  std::vector<Primitive> primitives;
  Aabb bounds;

  double sdf(const Vec3& x) const;
  /// Index of the primitive closest to x.
  std::size_t closest(const Vec3& x) const;
  Vec3 gradient(const Vec3& x) const;
};

struct RadarModel {
  double transmit_power = 1.0;
  double gain = 1.0;
  double effective_aperture = 1.0;
  double patch_area = 1.0;
  double noise_range = 0.02;      // metres
  double noise_intensity = 1.0;   // raw units
  double max_range = 20.0;
  double fov_azimuth = 1.0;       // half-angle, radians
  double fov_elevation = 0.35;
  int rays_azimuth = 64;
  int rays_elevation = 32;
  double db_min = -80.0;          // maps to raw_min
  double db_max = -30.0;          // maps to raw_max
  double raw_min = 64.0;
  double raw_max = 118.0;
  double detection_floor_db = -85.0;

  void validate() const;
  /// P_r = P_t G_t A_eff sigma / ((4 pi)^2 r^4).
  double received_power(double sigma, double range) const;
  /// Noise-free raw intensity (unquantized) for a received power.
  double raw_intensity(double power) const;
};

struct Trajectory {
  enum class Kind { Line, Circle, Orbit };
  Kind kind = Kind::Circle;
  int frames = 20;
  double dt = 0.1;
  Vec3 target = Vec3::Zero();    // the sensor looks at this point
  Vec3 center = Vec3::Zero();    // circle centre
  double radius = 6.0;
  std::vector<double> heights{2.0};  // one ring per height (circle: first only)
  double arc_start = 0.0;        // radians
  double arc_end = 2.0 * 3.14159265358979323846;
  bool closed = true;            // full circle: do not repeat the start pose
  Vec3 line_start = Vec3::Zero();
  Vec3 line_end = Vec3::UnitX();

  std::vector<Pose> poses() const;
};

/// Pose at `position` whose +x axis points at `target`, z up where possible.
Pose look_at(const Vec3& position, const Vec3& target);

struct HitRecord {
  Vec3 point = Vec3::Zero();  // world, noise-free
  Vec3 normal = Vec3::UnitZ();
  double range = 0.0;
  double cos_incidence = 0.0;
  double cross_section = 0.0;
  double power = 0.0;
  double raw_true = 0.0;  // noise-free, unquantized
  std::size_t primitive = 0;
};

/// First hit along origin + t dir, t in (0, max_range], by sphere tracing with
/// a final Newton refinement.
std::optional<HitRecord> cast_ray(const AnalyticScene& scene, const RadarModel& radar, const Vec3& origin,
                                  const Vec3& dir);

struct SimulatedFrame {
  PointCloudFrame frame;  // sensor frame, noisy, quantized
  std::vector<HitRecord> hits;
};

/// Rays over the field of view (row-major azimuth x elevation), range noise
/// along the ray, intensity noise and quantization. Deterministic in `seed`.
SimulatedFrame simulate_frame(const AnalyticScene& scene, const RadarModel& radar, const Pose& pose, double timestamp,
                              std::uint64_t seed, int ray_multiplier = 1, bool noise = true);
/// Single-threaded reference for simulate_frame.
SimulatedFrame simulate_frame_serial(const AnalyticScene& scene, const RadarModel& radar, const Pose& pose,
                                     double timestamp, std::uint64_t seed, int ray_multiplier = 1, bool noise = true);

struct SceneDescription {
  AnalyticScene scene;
  RadarModel radar;
  Trajectory trajectory;
  std::uint64_t seed = 1;
  int gt_ray_multiplier = 3;
};

/// Parses the JSON scene format (see scenes/*.json).
SceneDescription parse_scene(const std::string& json_text);
SceneDescription load_scene(const std::filesystem::path& path);

struct Dataset {
  std::vector<PointCloudFrame> frames;
  std::vector<std::vector<HitRecord>> hits;  // per frame, aligned with points
  std::vector<Vec3> gt_points;               // dense noise-free world points
  std::vector<double> gt_intensity;          // noise-free raw intensity of gt points
};

Dataset generate_dataset(const SceneDescription& desc);

/// Writes frames/poses (pipeline format), gt_points.ply, truth/frame_*.ply and
/// a copy of the scene description.
void write_dataset(const std::filesystem::path& dir, const Dataset& data, const std::string& scene_json);

}  // namespace radarfield::synth
