#pragma once

#include "radarfield/geometry.hpp"

#include <array>
#include <cstdint>
#include <limits>
#include <span>
#include <unordered_map>
#include <vector>

namespace radarfield {

/// Uniform voxel hash over a point set with expanding-ring nearest-neighbour
/// search. Distances are computed with the same expression as the brute-force
/// search, so both return bit-identical results.
class VoxelHashIndex {
 public:
  VoxelHashIndex(std::span<const Vec3> points, double cell_size);

  /// Distance to the nearest indexed point; +inf if the index is empty or no
  /// point lies within `max_radius`.
  double nearest_distance(const Vec3& q, double max_radius = std::numeric_limits<double>::infinity()) const;
  std::size_t size() const { return points_.size(); }
  double cell_size() const { return cell_; }

 private:
  struct Range {
    std::uint32_t begin = 0, count = 0;
  };
  std::array<long, 3> cell_of(const Vec3& p) const;
  static std::uint64_t key(long i, long j, long k);
  void scan_cell(long i, long j, long k, const Vec3& q, double& best) const;

  double cell_;
  std::vector<Vec3> points_;  // sorted by cell
  std::unordered_map<std::uint64_t, Range> cells_;
  std::array<long, 3> lo_{}, hi_{};  // occupied cell index bounds
};

double brute_force_nearest_distance(std::span<const Vec3> points, const Vec3& q);

enum class NnMethod { Indexed, BruteForce };

/// Nearest distance from every query to `points` (OpenMP-parallel over queries).
std::vector<double> nearest_distances(std::span<const Vec3> queries, std::span<const Vec3> points, NnMethod method,
                                      double cell_size = 0.2);
/// Single-threaded reference of the indexed path.
std::vector<double> nearest_distances_serial(std::span<const Vec3> queries, std::span<const Vec3> points,
                                             double cell_size = 0.2);

}  // namespace radarfield
