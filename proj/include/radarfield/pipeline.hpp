#pragma once

#include "radarfield/checkpoint.hpp"
#include "radarfield/config.hpp"
#include "radarfield/mesh.hpp"
#include "radarfield/meshing.hpp"

#include <filesystem>
#include <vector>

namespace radarfield {

/// Training inputs derived from a dataset: held-out frames split off, near
/// field removed, clouds moved to world coordinates and accumulated, and
/// intensities normalized with the rounded dataset-wide range.
struct PreparedData {
  std::vector<PointCloudFrame> train;     // world frame, normalized intensities
  std::vector<PointCloudFrame> held_out;  // world frame, raw intensities
  std::vector<std::size_t> train_frames;
  std::vector<std::size_t> held_out_frames;
  IntensityRange range;
  std::vector<Vec3> observed_points;  // world points used for training
};

bool is_held_out(std::size_t frame_index, int holdout_every);
/// `keep_every` > 1 additionally keeps only every n-th training frame.
PreparedData prepare_data(std::span<const PointCloudFrame> frames, const PreprocessConfig& cfg, int keep_every = 1);

struct TrainedRun {
  ModelBundle bundle;
  TrainingReport report;
  SampleStats sample_stats;
};

TrainedRun train_run(const PreparedData& data, const RunConfig& cfg, const ProgressFn& progress = {});

/// Writes model.ckpt, map.grid, train_log.csv, report.json, observed_points.ply
/// and config.txt into `dir`.
SavedModel save_run(const std::filesystem::path& dir, const TrainedRun& run, const PreparedData& data,
                    const RunConfig& cfg);

/// Marching cubes on the model inside its scene box, masked by `observed`.
TriangleMesh mesh_model(const RadarField& model, std::span<const Vec3> observed, const MeshConfig& cfg,
                        MeshingStats* stats = nullptr);

/// Intensity errors on held-out points in raw units, viewing each point along
/// its sensor ray.
IntensityErrors held_out_intensity_errors(const ModelBundle& bundle, std::span<const PointCloudFrame> held_out);

}  // namespace radarfield
