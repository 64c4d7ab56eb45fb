#pragma once

#include "radarfield/geometry.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace radarfield {

struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<std::uint32_t, 3>> triangles;
  std::vector<Vec3> normals;        // empty or one per vertex
  std::vector<double> intensities;  // empty or one per vertex

  bool empty() const { return triangles.empty(); }
  Vec3 face_normal(std::size_t t) const;  // unnormalized, |n| = 2 * area
  double face_area(std::size_t t) const { return 0.5 * face_normal(t).norm(); }
  /// Throws on out-of-range indices or size mismatches.
  void validate() const;
};

struct MeshTopology {
  std::size_t vertices = 0;
  std::size_t edges = 0;
  std::size_t faces = 0;
  std::size_t boundary_edges = 0;
  std::size_t nonmanifold_edges = 0;

  long euler_characteristic() const {
    return static_cast<long>(vertices) - static_cast<long>(edges) + static_cast<long>(faces);
  }
  bool closed() const { return boundary_edges == 0 && nonmanifold_edges == 0; }
};

/// Counts only vertices referenced by a triangle.
MeshTopology mesh_topology(const TriangleMesh& mesh);

}  // namespace radarfield
