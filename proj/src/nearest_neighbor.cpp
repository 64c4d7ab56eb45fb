#include "radarfield/nearest_neighbor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace radarfield {

VoxelHashIndex::VoxelHashIndex(std::span<const Vec3> points, double cell_size) : cell_(cell_size) {
  if (!(cell_size > 0.0)) throw std::invalid_argument("VoxelHashIndex: cell size must be positive");
  std::vector<std::uint64_t> keys(points.size());
  lo_.fill(std::numeric_limits<long>::max());
  hi_.fill(std::numeric_limits<long>::min());
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!points[i].allFinite()) throw std::invalid_argument("VoxelHashIndex: non-finite point");
    const auto c = cell_of(points[i]);
    keys[i] = key(c[0], c[1], c[2]);
    for (int a = 0; a < 3; ++a) {
      lo_[a] = std::min(lo_[a], c[a]);
      hi_[a] = std::max(hi_[a], c[a]);
    }
  }
  std::vector<std::size_t> order(points.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return keys[a] < keys[b]; });
  points_.reserve(points.size());
  for (std::size_t n = 0; n < order.size(); ++n) {
    const std::uint64_t k = keys[order[n]];
    auto& r = cells_[k];
    if (r.count == 0) r.begin = static_cast<std::uint32_t>(n);
    ++r.count;
    points_.push_back(points[order[n]]);
  }
}

std::array<long, 3> VoxelHashIndex::cell_of(const Vec3& p) const {
  return {static_cast<long>(std::floor(p.x() / cell_)), static_cast<long>(std::floor(p.y() / cell_)),
          static_cast<long>(std::floor(p.z() / cell_))};
}

std::uint64_t VoxelHashIndex::key(long i, long j, long k) {
  constexpr std::uint64_t mask = (1ULL << 21) - 1;
  return ((static_cast<std::uint64_t>(i) & mask) << 42) | ((static_cast<std::uint64_t>(j) & mask) << 21) |
         (static_cast<std::uint64_t>(k) & mask);
}

void VoxelHashIndex::scan_cell(long i, long j, long k, const Vec3& q, double& best) const {
  if (i < lo_[0] || i > hi_[0] || j < lo_[1] || j > hi_[1] || k < lo_[2] || k > hi_[2]) return;
  auto it = cells_.find(key(i, j, k));
  if (it == cells_.end()) return;
  for (std::uint32_t n = it->second.begin; n < it->second.begin + it->second.count; ++n)
    best = std::min(best, (points_[n] - q).norm());
}

double VoxelHashIndex::nearest_distance(const Vec3& q, double max_radius) const {
  double best = std::numeric_limits<double>::infinity();
  if (points_.empty()) return best;
  const auto c = cell_of(q);
  // Offsets of the occupied cell range relative to the query cell. Rings are
  // clipped to it, and rings closer than its Chebyshev distance are empty.
  std::array<long, 3> lo{}, hi{};
  long min_ring = 0, max_ring = 0;
  for (int a = 0; a < 3; ++a) {
    lo[a] = lo_[a] - c[a];
    hi[a] = hi_[a] - c[a];
    min_ring = std::max({min_ring, lo[a], -hi[a]});
    max_ring = std::max({max_ring, std::abs(lo[a]), std::abs(hi[a])});
  }
  for (long R = min_ring; R <= max_ring; ++R) {
    const long z0 = std::max(-R, lo[2]), z1 = std::min(R, hi[2]);
    const long y0 = std::max(-R, lo[1]), y1 = std::min(R, hi[1]);
    const long x0 = std::max(-R, lo[0]), x1 = std::min(R, hi[0]);
    for (long dz = z0; dz <= z1; ++dz)
      for (long dy = y0; dy <= y1; ++dy) {
        if (std::abs(dz) == R || std::abs(dy) == R) {
          for (long dx = x0; dx <= x1; ++dx) scan_cell(c[0] + dx, c[1] + dy, c[2] + dz, q, best);
        } else {
          if (-R >= x0) scan_cell(c[0] - R, c[1] + dy, c[2] + dz, q, best);
          if (R > 0 && R <= x1) scan_cell(c[0] + R, c[1] + dy, c[2] + dz, q, best);
        }
      }
    // Any point in ring R+1 or beyond is at least R cells away.
    const double bound = static_cast<double>(R) * cell_;
    if (best <= bound) break;
    if (bound > max_radius) break;
  }
  return best <= max_radius ? best : std::numeric_limits<double>::infinity();
}

double brute_force_nearest_distance(std::span<const Vec3> points, const Vec3& q) {
  double best = std::numeric_limits<double>::infinity();
  for (const Vec3& p : points) best = std::min(best, (p - q).norm());
  return best;
}

std::vector<double> nearest_distances(std::span<const Vec3> queries, std::span<const Vec3> points, NnMethod method,
                                      double cell_size) {
  std::vector<double> out(queries.size());
  const long n = static_cast<long>(queries.size());
  if (method == NnMethod::BruteForce) {
#pragma omp parallel for schedule(static)
    for (long i = 0; i < n; ++i) out[i] = brute_force_nearest_distance(points, queries[i]);
    return out;
  }
  const VoxelHashIndex index(points, cell_size);
#pragma omp parallel for schedule(dynamic, 256)
  for (long i = 0; i < n; ++i) out[i] = index.nearest_distance(queries[i]);
  return out;
}

std::vector<double> nearest_distances_serial(std::span<const Vec3> queries, std::span<const Vec3> points,
                                             double cell_size) {
  const VoxelHashIndex index(points, cell_size);
  std::vector<double> out(queries.size());
  for (std::size_t i = 0; i < queries.size(); ++i) out[i] = index.nearest_distance(queries[i]);
  return out;
}

}  // namespace radarfield
