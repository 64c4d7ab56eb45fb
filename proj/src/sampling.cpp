#include "radarfield/sampling.hpp"

#include "radarfield/hash_table.hpp"

#include <stdexcept>

namespace radarfield {

void SamplerConfig::validate() const {
  if (near_surface < 0 || free_space < 0) throw std::invalid_argument("sampler: sample counts must be >= 0");
  if (!(truncation > 0.0)) throw std::invalid_argument("sampler: truncation must be positive");
  if (!(free_space_margin >= 0.0)) throw std::invalid_argument("sampler: free_space_margin must be >= 0");
  if (!(near_clip >= 0.0)) throw std::invalid_argument("sampler: near_clip must be >= 0");
}

bool sample_point(const Vec3& origin, const Vec3& x, double intensity, const SamplerConfig& cfg, std::mt19937_64& rng,
                  std::vector<TrainingSample>& out, SampleStats* stats) {
  const Vec3 ray = x - origin;
  const double r = ray.norm();
  if (!(r > 0.0) || !std::isfinite(r)) {
    if (stats) ++stats->skipped_degenerate;
    return false;
  }
  const Vec3 dir = ray / r;
  for (int s = 0; s < cfg.near_surface; ++s) {
    const double delta = (2.0 * uniform01(rng) - 1.0) * cfg.truncation;
    const double t = r + delta;
    out.push_back({origin + t * dir, dir, r - t, intensity, false});
  }
  const double far = r - cfg.truncation - cfg.free_space_margin;
  if (far > cfg.near_clip) {
    for (int s = 0; s < cfg.free_space; ++s) {
      const double t = cfg.near_clip + uniform01(rng) * (far - cfg.near_clip);
      out.push_back({origin + t * dir, dir, r - t, 0.0, true});
    }
  } else if (cfg.free_space > 0 && stats) {
    ++stats->short_rays;
  }
  if (stats) ++stats->points;
  return true;
}

namespace {

struct PointRef {
  std::size_t frame;
  std::size_t index;
};

std::vector<PointRef> flatten(std::span<const PointCloudFrame> frames) {
  std::vector<PointRef> refs;
  for (std::size_t f = 0; f < frames.size(); ++f) {
    frames[f].validate();
    if (!frames[f].in_world()) throw std::invalid_argument("build_sample_pool: frames must be in world coordinates");
    for (std::size_t i = 0; i < frames[f].size(); ++i) refs.push_back({f, i});
  }
  return refs;
}

std::vector<TrainingSample> sample_range(std::span<const PointCloudFrame> frames, std::span<const PointRef> refs,
                                         std::size_t first, const SamplerConfig& cfg, std::uint64_t seed,
                                         SampleStats& stats) {
  std::vector<TrainingSample> out;
  out.reserve(refs.size() * static_cast<std::size_t>(cfg.near_surface + cfg.free_space));
  for (std::size_t k = 0; k < refs.size(); ++k) {
    const auto& f = frames[refs[k].frame];
    std::mt19937_64 rng(splitmix64(seed ^ splitmix64(first + k)));
    sample_point(f.origin(refs[k].index), f.points[refs[k].index], f.intensities[refs[k].index], cfg, rng, out,
                 &stats);
  }
  return out;
}

void merge_stats(SampleStats& into, const SampleStats& s) {
  into.points += s.points;
  into.skipped_degenerate += s.skipped_degenerate;
  into.short_rays += s.short_rays;
}

}  // namespace

std::vector<TrainingSample> build_sample_pool(std::span<const PointCloudFrame> world_frames, const SamplerConfig& cfg,
                                              std::uint64_t seed, SampleStats* stats) {
  cfg.validate();
  const auto refs = flatten(world_frames);
  constexpr std::size_t kChunk = 4096;
  const std::size_t chunks = (refs.size() + kChunk - 1) / kChunk;
  std::vector<std::vector<TrainingSample>> parts(chunks);
  std::vector<SampleStats> part_stats(chunks);
#pragma omp parallel for schedule(static)
  for (long c = 0; c < static_cast<long>(chunks); ++c) {
    const std::size_t begin = static_cast<std::size_t>(c) * kChunk;
    const std::size_t n = std::min(kChunk, refs.size() - begin);
    parts[c] = sample_range(world_frames, std::span(refs).subspan(begin, n), begin, cfg, seed, part_stats[c]);
  }
  std::size_t size = 0;
  for (const auto& p : parts) size += p.size();
  std::vector<TrainingSample> pool;
  pool.reserve(size);
  SampleStats total;
  for (std::size_t c = 0; c < chunks; ++c) {
    pool.insert(pool.end(), parts[c].begin(), parts[c].end());
    merge_stats(total, part_stats[c]);
  }
  if (stats) *stats = total;
  return pool;
}

std::vector<TrainingSample> build_sample_pool_serial(std::span<const PointCloudFrame> world_frames,
                                                     const SamplerConfig& cfg, std::uint64_t seed,
                                                     SampleStats* stats) {
  cfg.validate();
  const auto refs = flatten(world_frames);
  SampleStats total;
  auto pool = sample_range(world_frames, refs, 0, cfg, seed, total);
  if (stats) *stats = total;
  return pool;
}

}  // namespace radarfield
