#pragma once

#include "radarfield/geometry.hpp"

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace radarfield {

/// Sign convention for every SDF label in the pipeline: positive on the sensor
/// (free-space) side of a surface, negative behind it. A sample at ray range t
/// for a detection at range r has label r - t.
struct TrainingSample {
  Vec3 position = Vec3::Zero();
  Vec3 view_dir = Vec3::UnitX();  // unit, sensor -> point
  double sdf_label = 0.0;
  double intensity_label = 0.0;
  bool is_free_space = false;
};

struct SamplerConfig {
  int near_surface = 6;  // N_s
  int free_space = 6;    // N_f
  double truncation = 0.3;
  double free_space_margin = 0.3;
  double near_clip = 2.5;

  void validate() const;
};

struct SampleStats {
  std::size_t points = 0;
  std::size_t skipped_degenerate = 0;
  std::size_t short_rays = 0;  // rays too short for free-space samples
};

/// Appends the samples for one detection. Returns false (and appends nothing)
/// for a degenerate ray. `intensity` is already normalized to [0, 1].
bool sample_point(const Vec3& origin, const Vec3& x, double intensity, const SamplerConfig& cfg, std::mt19937_64& rng,
                  std::vector<TrainingSample>& out, SampleStats* stats = nullptr);

/// Samples every point of world-frame frames (per-point ray origins). Each
/// point draws from its own generator seeded by (seed, global point index), so
/// the pool does not depend on how the work is split across threads.
std::vector<TrainingSample> build_sample_pool(std::span<const PointCloudFrame> world_frames, const SamplerConfig& cfg,
                                              std::uint64_t seed, SampleStats* stats = nullptr);
/// Single-threaded reference for build_sample_pool.
std::vector<TrainingSample> build_sample_pool_serial(std::span<const PointCloudFrame> world_frames,
                                                     const SamplerConfig& cfg, std::uint64_t seed,
                                                     SampleStats* stats = nullptr);

/// Uniform double in [0, 1) from the top 53 bits of one draw.
inline double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace radarfield
