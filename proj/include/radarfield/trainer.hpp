#pragma once

#include "radarfield/model.hpp"
#include "radarfield/sampling.hpp"

#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

namespace radarfield {

struct TrainerConfig {
  int iterations = 4000;
  double learning_rate = 1e-3;
  int freeze_sdf_after = 1000;
  double sigmoid_scale = 0.05;     // sigma_s, metres
  double intensity_weight = 1.0;   // lambda
  int batch_size = 4096;
  std::uint64_t seed = 42;
  /// Free-space labels are clamped to this value in the SDF loss; <= 0 disables.
  double free_space_label_clamp = 0.3;
  int snapshot_every = 100;

  void validate() const;
};

struct IterationLog {
  int iteration = 0;
  double total = 0.0;
  double sdf = 0.0;
  double intensity = 0.0;
};

struct TrainingReport {
  std::vector<IterationLog> log;
  double wall_seconds = 0.0;
  std::size_t samples = 0;
  std::size_t grid_entries = 0;
  std::size_t map_size_bytes = 0;  // filled in once the model is saved
};

/// Thrown on a non-finite loss; the model has been restored to the last
/// finite snapshot.
class TrainingDiverged : public std::runtime_error {
 public:
  TrainingDiverged(int iteration, int restored_iteration);
  int iteration() const { return iteration_; }
  int restored_iteration() const { return restored_; }

 private:
  int iteration_;
  int restored_;
};

using ProgressFn = std::function<void(const IterationLog&)>;

/// Adam on mean SDF loss + lambda * mean intensity loss per batch. After
/// `freeze_sdf_after` iterations the SDF network and feature grid receive no
/// further updates.
TrainingReport train(std::span<const TrainingSample> pool, RadarField& model, const TrainerConfig& cfg,
                     const ProgressFn& progress = {});

/// Mean losses of `model` over `samples` without updating anything.
IterationLog evaluate_losses(std::span<const TrainingSample> samples, const RadarField& model,
                             const TrainerConfig& cfg);

}  // namespace radarfield
