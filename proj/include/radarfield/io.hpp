#pragma once

#include "radarfield/geometry.hpp"
#include "radarfield/mesh.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace radarfield::io {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class PlyFormat { Ascii, BinaryLittleEndian };
enum class PlyScalar { Float32, Float64, UInt8, Int32 };

/// Vertex properties in column form plus an optional triangle list.
struct PlyData {
  std::vector<std::string> names;
  std::vector<std::vector<double>> columns;
  std::vector<std::array<std::uint32_t, 3>> faces;
  std::vector<std::string> comments;

  std::size_t vertex_count() const { return columns.empty() ? 0 : columns.front().size(); }
  const std::vector<double>* column(const std::string& name) const;
};

struct PlyColumnSpec {
  std::string name;
  PlyScalar type = PlyScalar::Float64;
};

PlyData read_ply(const std::filesystem::path& path);
void write_ply(const std::filesystem::path& path, const PlyData& data, std::span<const PlyColumnSpec> types,
               PlyFormat format = PlyFormat::BinaryLittleEndian);

/// Reads x,y,z,intensity (any order, extra properties ignored) in the sensor frame.
PointCloudFrame read_frame_ply(const std::filesystem::path& path);
/// Writes x,y,z,intensity as f64 so a round trip is bit-exact.
void write_frame_ply(const std::filesystem::path& path, const PointCloudFrame& frame,
                     PlyFormat format = PlyFormat::BinaryLittleEndian);

/// Whitespace-separated `x y z intensity` lines; `#` starts a comment.
PointCloudFrame read_xyzi(const std::filesystem::path& path);
void write_xyzi(const std::filesystem::path& path, const PointCloudFrame& frame);

struct StampedPose {
  double timestamp = 0.0;
  Pose pose;
};

/// TUM trajectory format: `timestamp tx ty tz qx qy qz qw`.
std::vector<StampedPose> read_tum(const std::filesystem::path& path);
void write_tum(const std::filesystem::path& path, std::span<const StampedPose> poses);

/// Nearest pose by timestamp, nullopt if the skew exceeds `max_skew`.
std::optional<Pose> associate_pose(std::span<const StampedPose> poses, double timestamp, double max_skew);

std::vector<Vec3> read_points(const std::filesystem::path& path);
void write_points(const std::filesystem::path& path, std::span<const Vec3> points);

enum class MeshColor { None, Normals };

void write_mesh_ply(const std::filesystem::path& path, const TriangleMesh& mesh, MeshColor color = MeshColor::None);
TriangleMesh read_mesh_ply(const std::filesystem::path& path);

/// Dataset directory layout:
///   frames.txt        `timestamp relative/path.ply` per frame
///   poses.txt         TUM trajectory
///   frames/*.ply      sensor-frame clouds
struct Dataset {
  std::vector<PointCloudFrame> frames;
};

void write_dataset(const std::filesystem::path& dir, std::span<const PointCloudFrame> frames);
Dataset read_dataset(const std::filesystem::path& dir, double max_pose_skew = 0.05);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace radarfield::io
