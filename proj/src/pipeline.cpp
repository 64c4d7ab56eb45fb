#include "radarfield/pipeline.hpp"

#include "radarfield/io.hpp"

#include <json.hpp>

#include <sstream>

namespace radarfield {

bool is_held_out(std::size_t frame_index, int holdout_every) {
  if (holdout_every <= 0) return false;
  const auto n = static_cast<std::size_t>(holdout_every);
  return frame_index % n == n - 1;
}

PreparedData prepare_data(std::span<const PointCloudFrame> frames, const PreprocessConfig& cfg, int keep_every) {
  if (keep_every < 1) throw std::invalid_argument("prepare_data: keep_every must be >= 1");
  PreparedData out;
  out.range = intensity_range(frames);
  std::vector<PointCloudFrame> train_world;
  std::size_t train_count = 0;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    PointCloudFrame world = transform_to_world(near_field_filter(frames[i], cfg.near_field_radius));
    if (is_held_out(i, cfg.holdout_every)) {
      out.held_out_frames.push_back(i);
      out.held_out.push_back(std::move(world));
      continue;
    }
    if (train_count++ % static_cast<std::size_t>(keep_every) != 0) continue;
    out.train_frames.push_back(i);
    train_world.push_back(std::move(world));
  }
  const auto accumulated =
      accumulate_frames(train_world, static_cast<std::size_t>(cfg.accumulate), cfg.accumulate_overlap);
  out.train = normalize_intensities(accumulated, out.range);
  // Overlapping windows repeat points; the mask only needs each point once.
  for (const auto& f : cfg.accumulate_overlap ? train_world : out.train)
    out.observed_points.insert(out.observed_points.end(), f.points.begin(), f.points.end());
  return out;
}

TrainedRun train_run(const PreparedData& data, const RunConfig& cfg, const ProgressFn& progress) {
  cfg.validate();
  TrainedRun run;
  const auto pool = build_sample_pool(data.train, cfg.sampler, cfg.seed + 1, &run.sample_stats);
  if (pool.empty()) throw std::runtime_error("training: no samples (empty dataset after preprocessing?)");
  Aabb box = Aabb::empty();
  for (const auto& s : pool) box.expand(s.position);
  for (const auto& f : data.train)
    for (std::size_t i = 0; i < f.size(); ++i) box.expand(f.origin(i));
  box = box.padded(cfg.preprocess.scene_padding);

  RadarField model(box, cfg.effective_model(), cfg.seed);
  TrainerConfig tc = cfg.trainer;
  tc.seed = cfg.seed + 2;
  run.report = train(pool, model, tc, progress);
  run.bundle = ModelBundle{std::move(model), data.range};
  return run;
}

SavedModel save_run(const std::filesystem::path& dir, const TrainedRun& run, const PreparedData& data,
                    const RunConfig& cfg) {
  std::filesystem::create_directories(dir);
  const SavedModel saved = save_model(dir, run.bundle);

  std::ostringstream log;
  log.precision(10);
  log << "iteration,total_loss,sdf_loss,intensity_loss\n";
  for (const auto& l : run.report.log) log << l.iteration << ',' << l.total << ',' << l.sdf << ',' << l.intensity << '\n';
  io::write_text(dir / "train_log.csv", log.str());

  nlohmann::ordered_json rep;
  rep["samples"] = run.report.samples;
  rep["grid_entries"] = run.report.grid_entries;
  rep["map_size"] = saved.map_size();
  rep["iterations"] = run.report.log.size();
  rep["final_total_loss"] = run.report.log.empty() ? 0.0 : run.report.log.back().total;
  rep["intensity_min"] = data.range.min;
  rep["intensity_max"] = data.range.max;
  rep["train_frames"] = data.train_frames;
  rep["held_out_frames"] = data.held_out_frames;
  rep["skipped_degenerate"] = run.sample_stats.skipped_degenerate;
  rep["short_rays"] = run.sample_stats.short_rays;
  rep["wall_seconds"] = run.report.wall_seconds;
  io::write_text(dir / "report.json", rep.dump(2) + "\n");

  io::write_points(dir / "observed_points.ply", data.observed_points);
  io::write_text(dir / "config.txt", to_text(cfg));
  return saved;
}

TriangleMesh mesh_model(const RadarField& model, std::span<const Vec3> observed, const MeshConfig& cfg,
                        MeshingStats* stats) {
  VoxelGridSpec spec;
  spec.aabb = model.scene();
  spec.voxel_size = cfg.voxel_size;
  spec.mask_radius = cfg.mask_radius;
  return extract_mesh(ModelSdfField(model), spec, observed, stats);
}

IntensityErrors held_out_intensity_errors(const ModelBundle& bundle, std::span<const PointCloudFrame> held_out) {
  std::vector<Vec3> x, v;
  std::vector<double> measured;
  for (const auto& f : held_out)
    for (std::size_t i = 0; i < f.size(); ++i) {
      const Vec3 d = f.points[i] - f.origin(i);
      if (d.norm() < 1e-9) continue;
      x.push_back(f.points[i]);
      v.push_back(d.normalized());
      measured.push_back(f.intensities[i]);
    }
  if (x.empty()) throw std::invalid_argument("held-out evaluation: no held-out points");
  std::vector<double> pred(x.size());
  bundle.model.evaluate_intensity(x, v, pred);
  for (double& p : pred) p = bundle.intensity_range.denormalize(p);
  return intensity_errors(pred, measured);
}

}  // namespace radarfield
