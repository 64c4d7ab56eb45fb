#include "radarfield/synthetic.hpp"

#include "radarfield/hash_table.hpp"
#include "radarfield/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

namespace radarfield::synth {

double Primitive::sdf(const Vec3& x) const {
  switch (kind) {
    case Kind::Plane: return normal.dot(x - center);
    case Kind::Sphere:
    case Kind::CornerReflector: return (x - center).norm() - radius;
    case Kind::Box: {
      const Vec3 q = (x - center).cwiseAbs() - half_extents;
      return q.cwiseMax(0.0).norm() + std::min(q.maxCoeff(), 0.0);
    }
  }
  return std::numeric_limits<double>::infinity();
}

Vec3 Primitive::gradient(const Vec3& x) const {
  switch (kind) {
    case Kind::Plane: return normal;
    case Kind::Sphere:
    case Kind::CornerReflector: {
      const Vec3 r = x - center;
      const double n = r.norm();
      return n > 0.0 ? Vec3(r / n) : Vec3::UnitZ();
    }
    case Kind::Box: {
      const Vec3 d = x - center;
      const Vec3 q = d.cwiseAbs() - half_extents;
      Vec3 g = Vec3::Zero();
      if (q.maxCoeff() > 0.0) {
        g = q.cwiseMax(0.0);
        for (int a = 0; a < 3; ++a) g[a] *= d[a] < 0.0 ? -1.0 : 1.0;
        return g.normalized();
      }
      Eigen::Index axis;
      q.maxCoeff(&axis);
      g[axis] = d[axis] < 0.0 ? -1.0 : 1.0;
      return g;
    }
  }
  return Vec3::UnitZ();
}

double Primitive::cross_section(const Vec3& v, const Vec3& n) const {
  const double c = std::max(0.0, -v.dot(n));
  double sigma = reflectivity * std::pow(c, exponent);
  if (kind == Kind::CornerReflector) {
    const double angle = std::acos(std::clamp(-v.dot(normal), -1.0, 1.0));
    if (angle <= aperture) sigma += spike_gain;
  }
  return sigma;
}

double AnalyticScene::sdf(const Vec3& x) const {
  double d = std::numeric_limits<double>::infinity();
  for (const auto& p : primitives) d = std::min(d, p.sdf(x));
  return d;
}

std::size_t AnalyticScene::closest(const Vec3& x) const {
  std::size_t best = 0;
  double d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < primitives.size(); ++i) {
    const double s = primitives[i].sdf(x);
    if (s < d) {
      d = s;
      best = i;
    }
  }
  return best;
}

Vec3 AnalyticScene::gradient(const Vec3& x) const {
  if (primitives.empty()) return Vec3::UnitZ();
  return primitives[closest(x)].gradient(x);
}

void RadarModel::validate() const {
  if (!(transmit_power > 0.0 && gain > 0.0 && effective_aperture > 0.0 && patch_area > 0.0 && max_range > 0.0))
    throw std::invalid_argument("radar: constants must be positive");
  if (!(noise_range >= 0.0 && noise_intensity >= 0.0)) throw std::invalid_argument("radar: noise must be >= 0");
  if (!(fov_azimuth > 0.0 && fov_elevation >= 0.0)) throw std::invalid_argument("radar: bad field of view");
  if (rays_azimuth < 1 || rays_elevation < 1) throw std::invalid_argument("radar: ray counts must be >= 1");
  if (!(db_max > db_min) || !(raw_max > raw_min)) throw std::invalid_argument("radar: bad intensity mapping");
}

double RadarModel::received_power(double sigma, double range) const {
  const double four_pi = 4.0 * std::numbers::pi;
  return transmit_power * gain * effective_aperture * sigma / (four_pi * four_pi * std::pow(range, 4));
}

double RadarModel::raw_intensity(double power) const {
  const double db = 10.0 * std::log10(power);
  return raw_min + (db - db_min) / (db_max - db_min) * (raw_max - raw_min);
}

Pose look_at(const Vec3& position, const Vec3& target) {
  Vec3 x = target - position;
  if (x.norm() < 1e-12) throw std::invalid_argument("look_at: target coincides with the position");
  x.normalize();
  Vec3 up = Vec3::UnitZ();
  if (std::abs(x.dot(up)) > 0.999) up = Vec3::UnitY();
  const Vec3 y = up.cross(x).normalized();
  const Vec3 z = x.cross(y);
  Eigen::Matrix3d R;
  R.col(0) = x;
  R.col(1) = y;
  R.col(2) = z;
  return Pose(Quat(R), position);
}

std::vector<Pose> Trajectory::poses() const {
  std::vector<Pose> out;
  if (frames <= 0) return out;
  auto arc_pose = [&](int i, int n, double h) {
    const double denom = closed ? n : std::max(1, n - 1);
    const double a = arc_start + (arc_end - arc_start) * i / denom;
    const Vec3 p = center + Vec3(radius * std::cos(a), radius * std::sin(a), h);
    return look_at(p, target);
  };
  switch (kind) {
    case Kind::Line:
      for (int i = 0; i < frames; ++i) {
        const double s = frames == 1 ? 0.0 : static_cast<double>(i) / (frames - 1);
        out.push_back(look_at(line_start + s * (line_end - line_start), target));
      }
      break;
    case Kind::Circle:
      for (int i = 0; i < frames; ++i) out.push_back(arc_pose(i, frames, heights.empty() ? 0.0 : heights[0]));
      break;
    case Kind::Orbit: {
      if (heights.empty()) throw std::invalid_argument("trajectory: orbit needs at least one height");
      const int rings = static_cast<int>(heights.size());
      for (int r = 0; r < rings; ++r) {
        const int n = frames / rings + (r < frames % rings ? 1 : 0);
        for (int i = 0; i < n; ++i) out.push_back(arc_pose(i, n, heights[static_cast<std::size_t>(r)]));
      }
      break;
    }
  }
  return out;
}

std::optional<HitRecord> cast_ray(const AnalyticScene& scene, const RadarModel& radar, const Vec3& origin,
                                  const Vec3& dir) {
  double t = 0.0;
  bool hit = false;
  for (int it = 0; it < 20000; ++it) {
    const double s = scene.sdf(origin + t * dir);
    if (s < 1e-7) {
      hit = true;
      break;
    }
    t += s;
    if (t > radar.max_range) return std::nullopt;
  }
  if (!hit) return std::nullopt;
  // Newton polish on the closest primitive brings planes and spheres to
  // round-off accuracy.
  const std::size_t prim = scene.closest(origin + t * dir);
  const Primitive& p = scene.primitives[prim];
  for (int k = 0; k < 4; ++k) {
    const Vec3 x = origin + t * dir;
    const double slope = p.gradient(x).dot(dir);
    if (std::abs(slope) < 1e-9) break;
    t -= p.sdf(x) / slope;
  }
  if (!(t > 0.0) || t > radar.max_range) return std::nullopt;
  HitRecord h;
  h.point = origin + t * dir;
  if (std::abs(scene.sdf(h.point)) > 1e-5) return std::nullopt;
  h.primitive = prim;
  h.normal = p.gradient(h.point);
  h.range = t;
  h.cos_incidence = std::max(0.0, -dir.dot(h.normal));
  h.cross_section = p.cross_section(dir, h.normal) * radar.patch_area;
  h.power = radar.received_power(h.cross_section, t);
  h.raw_true = h.power > 0.0 ? radar.raw_intensity(h.power) : -std::numeric_limits<double>::infinity();
  return h;
}

namespace {

Vec3 ray_direction(const RadarModel& radar, int ia, int ie, int na, int ne) {
  const double az = -radar.fov_azimuth + (ia + 0.5) * 2.0 * radar.fov_azimuth / na;
  const double el = -radar.fov_elevation + (ie + 0.5) * 2.0 * radar.fov_elevation / ne;
  return {std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el)};
}

struct RayResult {
  bool valid = false;
  Vec3 point;
  double raw = 0.0;
  HitRecord hit;
};

RayResult trace(const AnalyticScene& scene, const RadarModel& radar, const Pose& pose, const Vec3& dir_sensor,
                std::uint64_t ray_seed, bool noise) {
  RayResult out;
  const Vec3 dir = pose.rotation * dir_sensor;
  const auto hit = cast_ray(scene, radar, pose.translation, dir);
  if (!hit || !(hit->power > 0.0)) return out;
  if (10.0 * std::log10(hit->power) < radar.detection_floor_db) return out;
  double range = hit->range, raw = hit->raw_true;
  if (noise) {
    std::mt19937_64 rng(ray_seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    range += radar.noise_range * gauss(rng);
    raw += radar.noise_intensity * gauss(rng);
    raw = std::clamp(std::round(raw), radar.raw_min, radar.raw_max);
  } else {
    raw = std::clamp(raw, radar.raw_min, radar.raw_max);
  }
  out.valid = range > 0.0;
  out.point = dir_sensor * range;
  out.raw = raw;
  out.hit = *hit;
  return out;
}

SimulatedFrame simulate(const AnalyticScene& scene, const RadarModel& radar, const Pose& pose, double timestamp,
                        std::uint64_t seed, int multiplier, bool noise, bool parallel) {
  radar.validate();
  if (multiplier < 1) throw std::invalid_argument("simulate_frame: ray multiplier must be >= 1");
  const int na = radar.rays_azimuth * multiplier, ne = radar.rays_elevation * multiplier;
  const long n = static_cast<long>(na) * ne;
  std::vector<RayResult> rays(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(dynamic, 64) if (parallel)
  for (long r = 0; r < n; ++r) {
    const int ia = static_cast<int>(r / ne), ie = static_cast<int>(r % ne);
    rays[r] = trace(scene, radar, pose, ray_direction(radar, ia, ie, na, ne), splitmix64(seed ^ splitmix64(r)), noise);
  }
  SimulatedFrame out;
  out.frame.timestamp = timestamp;
  out.frame.sensor_pose = pose;
  for (const auto& r : rays) {
    if (!r.valid) continue;
    out.frame.points.push_back(r.point);
    out.frame.intensities.push_back(r.raw);
    out.hits.push_back(r.hit);
  }
  return out;
}

}  // namespace

SimulatedFrame simulate_frame(const AnalyticScene& scene, const RadarModel& radar, const Pose& pose, double timestamp,
                              std::uint64_t seed, int ray_multiplier, bool noise) {
  return simulate(scene, radar, pose, timestamp, seed, ray_multiplier, noise, true);
}

SimulatedFrame simulate_frame_serial(const AnalyticScene& scene, const RadarModel& radar, const Pose& pose,
                                     double timestamp, std::uint64_t seed, int ray_multiplier, bool noise) {
  return simulate(scene, radar, pose, timestamp, seed, ray_multiplier, noise, false);
}

namespace {

using nlohmann::json;

Vec3 vec(const json& j, const char* key, const Vec3& fallback) {
  if (!j.contains(key)) return fallback;
  const auto& a = j.at(key);
  if (!a.is_array() || a.size() != 3) throw std::invalid_argument(std::string("scene: '") + key + "' must be [x, y, z]");
  return {a[0].get<double>(), a[1].get<double>(), a[2].get<double>()};
}

double num(const json& j, const char* key, double fallback) { return j.contains(key) ? j.at(key).get<double>() : fallback; }

double deg(const json& j, const char* key, double fallback_rad) {
  return j.contains(key) ? j.at(key).get<double>() * std::numbers::pi / 180.0 : fallback_rad;
}

Primitive parse_primitive(const json& j) {
  Primitive p;
  const std::string type = j.at("type").get<std::string>();
  if (type == "plane") p.kind = Primitive::Kind::Plane;
  else if (type == "sphere") p.kind = Primitive::Kind::Sphere;
  else if (type == "box") p.kind = Primitive::Kind::Box;
  else if (type == "corner_reflector") p.kind = Primitive::Kind::CornerReflector;
  else throw std::invalid_argument("scene: unknown primitive type '" + type + "'");
  p.center = vec(j, "center", vec(j, "point", Vec3::Zero()));
  p.normal = vec(j, "normal", vec(j, "axis", Vec3::UnitZ()));
  if (p.normal.norm() < 1e-12) throw std::invalid_argument("scene: zero normal");
  p.normal.normalize();
  p.radius = num(j, "radius", 1.0);
  p.half_extents = vec(j, "half_extents", Vec3::Ones());
  p.reflectivity = num(j, "reflectivity", 0.5);
  p.exponent = num(j, "exponent", 1.0);
  p.spike_gain = num(j, "spike_gain", 0.0);
  p.aperture = deg(j, "aperture_deg", 0.7);
  if (!(p.reflectivity > 0.0 && p.reflectivity <= 1.0)) throw std::invalid_argument("scene: reflectivity must be in (0, 1]");
  if (!(p.radius > 0.0)) throw std::invalid_argument("scene: radius must be positive");
  return p;
}

}  // namespace

SceneDescription parse_scene(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("scene: ") + e.what());
  }
  SceneDescription d;
  try {
    d.seed = j.value("seed", std::uint64_t{1});
    for (const auto& p : j.at("primitives")) d.scene.primitives.push_back(parse_primitive(p));
    const auto& b = j.at("bounds");
    d.scene.bounds = Aabb(vec(b, "min", Vec3::Zero()), vec(b, "max", Vec3::Zero()));
    if (!d.scene.bounds.valid()) throw std::invalid_argument("scene: bounds min must not exceed max");

    const json r = j.value("radar", json::object());
    RadarModel& m = d.radar;
    m.transmit_power = num(r, "transmit_power", m.transmit_power);
    m.gain = num(r, "gain", m.gain);
    m.effective_aperture = num(r, "effective_aperture", m.effective_aperture);
    m.patch_area = num(r, "patch_area", m.patch_area);
    m.noise_range = num(r, "noise_range", m.noise_range);
    m.noise_intensity = num(r, "noise_intensity", m.noise_intensity);
    m.max_range = num(r, "max_range", m.max_range);
    m.fov_azimuth = deg(r, "fov_azimuth_deg", m.fov_azimuth);
    m.fov_elevation = deg(r, "fov_elevation_deg", m.fov_elevation);
    m.rays_azimuth = r.value("rays_azimuth", m.rays_azimuth);
    m.rays_elevation = r.value("rays_elevation", m.rays_elevation);
    m.db_min = num(r, "db_min", m.db_min);
    m.db_max = num(r, "db_max", m.db_max);
    m.raw_min = num(r, "raw_min", m.raw_min);
    m.raw_max = num(r, "raw_max", m.raw_max);
    m.detection_floor_db = num(r, "detection_floor_db", m.detection_floor_db);
    m.validate();

    const auto& t = j.at("trajectory");
    Trajectory& tr = d.trajectory;
    const std::string kind = t.value("type", std::string("circle"));
    if (kind == "line") tr.kind = Trajectory::Kind::Line;
    else if (kind == "circle") tr.kind = Trajectory::Kind::Circle;
    else if (kind == "orbit") tr.kind = Trajectory::Kind::Orbit;
    else throw std::invalid_argument("scene: unknown trajectory type '" + kind + "'");
    tr.frames = t.value("frames", tr.frames);
    if (tr.frames < 0) throw std::invalid_argument("scene: frame count must be >= 0");
    tr.dt = num(t, "dt", tr.dt);
    tr.target = vec(t, "target", tr.target);
    tr.center = vec(t, "center", tr.center);
    tr.radius = num(t, "radius", tr.radius);
    if (t.contains("heights")) tr.heights = t.at("heights").get<std::vector<double>>();
    else if (t.contains("height")) tr.heights = {t.at("height").get<double>()};
    tr.arc_start = deg(t, "arc_start_deg", tr.arc_start);
    tr.arc_end = deg(t, "arc_end_deg", tr.arc_end);
    tr.closed = t.value("closed", std::abs(tr.arc_end - tr.arc_start - 2.0 * std::numbers::pi) < 1e-9);
    tr.line_start = vec(t, "start", tr.line_start);
    tr.line_end = vec(t, "end", tr.line_end);

    if (j.contains("ground_truth")) d.gt_ray_multiplier = j.at("ground_truth").value("ray_multiplier", 3);
    if (d.gt_ray_multiplier < 1) throw std::invalid_argument("scene: ray multiplier must be >= 1");
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("scene: ") + e.what());
  }
  return d;
}

SceneDescription load_scene(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw io::IoError("scene file not found: " + path.string());
  return parse_scene(io::read_text(path));
}

Dataset generate_dataset(const SceneDescription& desc) {
  Dataset data;
  const auto poses = desc.trajectory.poses();
  for (std::size_t f = 0; f < poses.size(); ++f) {
    const std::uint64_t seed = splitmix64(desc.seed + f);
    auto sim = simulate_frame(desc.scene, desc.radar, poses[f], static_cast<double>(f) * desc.trajectory.dt, seed);
    data.frames.push_back(std::move(sim.frame));
    data.hits.push_back(std::move(sim.hits));
    auto dense = simulate_frame(desc.scene, desc.radar, poses[f], 0.0, 0, desc.gt_ray_multiplier, false);
    for (const auto& h : dense.hits) {
      data.gt_points.push_back(h.point);
      data.gt_intensity.push_back(h.raw_true);
    }
  }
  return data;
}

void write_dataset(const std::filesystem::path& dir, const Dataset& data, const std::string& scene_json) {
  io::write_dataset(dir, data.frames);
  io::PlyData gt;
  gt.names = {"x", "y", "z", "intensity"};
  gt.columns.assign(4, {});
  for (std::size_t i = 0; i < data.gt_points.size(); ++i) {
    for (int a = 0; a < 3; ++a) gt.columns[a].push_back(data.gt_points[i][a]);
    gt.columns[3].push_back(data.gt_intensity[i]);
  }
  const std::vector<io::PlyColumnSpec> f64{{"x"}, {"y"}, {"z"}, {"intensity"}};
  io::write_ply(dir / "gt_points.ply", gt, f64);

  std::filesystem::create_directories(dir / "truth");
  const std::vector<io::PlyColumnSpec> truth_types{{"x"}, {"y"}, {"z"}, {"intensity_true"}, {"cos_incidence"},
                                                   {"range"}, {"primitive", io::PlyScalar::Int32}};
  for (std::size_t f = 0; f < data.hits.size(); ++f) {
    io::PlyData t;
    t.names = {"x", "y", "z", "intensity_true", "cos_incidence", "range", "primitive"};
    t.columns.assign(7, {});
    for (const auto& h : data.hits[f]) {
      for (int a = 0; a < 3; ++a) t.columns[a].push_back(h.point[a]);
      t.columns[3].push_back(h.raw_true);
      t.columns[4].push_back(h.cos_incidence);
      t.columns[5].push_back(h.range);
      t.columns[6].push_back(static_cast<double>(h.primitive));
    }
    char name[32];
    std::snprintf(name, sizeof name, "frame_%06zu.ply", f);
    io::write_ply(dir / "truth" / name, t, truth_types);
  }
  io::write_text(dir / "scene.json", scene_json);
}

}  // namespace radarfield::synth
