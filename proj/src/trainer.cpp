#include "radarfield/trainer.hpp"

#include "radarfield/losses.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <optional>
#include <random>
#include <string>

namespace radarfield {

void TrainerConfig::validate() const {
  if (iterations < 0) throw std::invalid_argument("trainer: iterations must be >= 0");
  if (freeze_sdf_after < 0 || freeze_sdf_after > iterations)
    throw std::invalid_argument("trainer: freeze_sdf_after must lie in [0, iterations]");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("trainer: learning rate must be positive");
  if (!(sigmoid_scale > 0.0)) throw std::invalid_argument("trainer: sigmoid scale must be positive");
  if (!(intensity_weight >= 0.0)) throw std::invalid_argument("trainer: intensity weight must be >= 0");
  if (batch_size < 1) throw std::invalid_argument("trainer: batch size must be >= 1");
  if (snapshot_every < 1) throw std::invalid_argument("trainer: snapshot interval must be >= 1");
}

TrainingDiverged::TrainingDiverged(int iteration, int restored_iteration)
    : std::runtime_error("training diverged at iteration " + std::to_string(iteration) +
                         "; model restored to iteration " + std::to_string(restored_iteration)),
      iteration_(iteration),
      restored_(restored_iteration) {}

namespace {

double effective_label(const TrainingSample& s, const TrainerConfig& cfg) {
  if (s.is_free_space && cfg.free_space_label_clamp > 0.0) return std::min(s.sdf_label, cfg.free_space_label_clamp);
  return s.sdf_label;
}

struct Batch {
  std::vector<Vec3> x, v;
  std::vector<std::size_t> index;
};

// Pool-wide SDF outputs of the frozen SDF network.
struct FrozenSdf {
  Eigen::MatrixXd features;  // sdf_feature_dim x N
  std::vector<double> d;
};

FrozenSdf freeze(std::span<const TrainingSample> pool, const RadarField& model) {
  FrozenSdf out;
  const auto N = static_cast<Eigen::Index>(pool.size());
  out.features.resize(model.sdf_feature_dim(), N);
  out.d.resize(pool.size());
  const bool feats = out.features.rows() > 0;
  std::vector<Vec3> x;
  for (std::size_t begin = 0; begin < pool.size(); begin += RadarField::kEvalChunk) {
    const std::size_t end = std::min(pool.size(), begin + RadarField::kEvalChunk);
    x.clear();
    for (std::size_t i = begin; i < end; ++i) x.push_back(pool[i].position);
    ForwardRecord rec;
    ForwardOptions opt;
    opt.intensity = false;
    opt.normals = model.intensity_needs_normals();
    model.forward(x, {}, opt, rec);
    for (std::size_t i = begin; i < end; ++i) out.d[i] = rec.d(static_cast<Eigen::Index>(i - begin));
    if (feats)
      out.features.middleCols(static_cast<Eigen::Index>(begin), static_cast<Eigen::Index>(end - begin)) =
          model.sdf_features(rec);
  }
  return out;
}

}  // namespace

IterationLog evaluate_losses(std::span<const TrainingSample> samples, const RadarField& model,
                             const TrainerConfig& cfg) {
  IterationLog log;
  if (samples.empty()) return log;
  std::vector<Vec3> x, v;
  std::vector<double> d(samples.size()), i(samples.size());
  for (const auto& s : samples) {
    x.push_back(s.position);
    v.push_back(s.view_dir);
  }
  model.evaluate_sdf(x, d);
  model.evaluate_intensity(x, v, i);
  for (std::size_t k = 0; k < samples.size(); ++k) {
    log.sdf += sdf_loss(d[k], effective_label(samples[k], cfg), cfg.sigmoid_scale);
    log.intensity += intensity_loss(i[k], samples[k].intensity_label);
  }
  const auto n = static_cast<double>(samples.size());
  log.sdf /= n;
  log.intensity /= n;
  log.total = log.sdf + cfg.intensity_weight * log.intensity;
  return log;
}

TrainingReport train(std::span<const TrainingSample> pool, RadarField& model, const TrainerConfig& cfg,
                     const ProgressFn& progress) {
  cfg.validate();
  if (pool.empty()) throw std::invalid_argument("train: empty sample pool");
  const auto start = std::chrono::steady_clock::now();

  for (const auto& s : pool) model.grid().materialize(s.position);

  TrainingReport report;
  report.samples = pool.size();
  report.log.reserve(static_cast<std::size_t>(cfg.iterations));

  AdamConfig adam;
  adam.learning_rate = cfg.learning_rate;
  const bool train_intensity = cfg.intensity_weight > 0.0;

  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(pool.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::size_t cursor = order.size();

  const std::size_t B = std::min(pool.size(), static_cast<std::size_t>(cfg.batch_size));
  Batch batch;
  std::vector<double> dd(B), di(B);
  ForwardRecord rec;
  std::optional<FrozenSdf> frozen;
  Eigen::MatrixXd batch_features;

  RadarField snapshot = model;
  int snapshot_iteration = 0;
  long sdf_step = 0, intensity_step = 0;

  for (int it = 0; it < cfg.iterations; ++it) {
    const bool sdf_phase = it < cfg.freeze_sdf_after;
    if (!sdf_phase && !frozen) frozen = freeze(pool, model);

    batch.x.clear();
    batch.v.clear();
    batch.index.clear();
    while (batch.index.size() < B) {
      if (cursor == order.size()) {
        std::shuffle(order.begin(), order.end(), rng);
        cursor = 0;
      }
      const std::size_t k = order[cursor++];
      batch.index.push_back(k);
      batch.x.push_back(pool[k].position);
      batch.v.push_back(pool[k].view_dir);
    }

    ForwardOptions opt;
    opt.intensity = true;
    if (frozen) {
      batch_features.resize(frozen->features.rows(), static_cast<Eigen::Index>(B));
      for (std::size_t j = 0; j < B; ++j)
        batch_features.col(static_cast<Eigen::Index>(j)) = frozen->features.col(static_cast<Eigen::Index>(batch.index[j]));
      opt.sdf_features = &batch_features;
    }
    model.forward(batch.x, batch.v, opt, rec);

    IterationLog log;
    log.iteration = it;
    const double inv_b = 1.0 / static_cast<double>(B);
    for (std::size_t j = 0; j < B; ++j) {
      const TrainingSample& s = pool[batch.index[j]];
      const double d = frozen ? frozen->d[batch.index[j]] : rec.d(static_cast<Eigen::Index>(j));
      const double label = effective_label(s, cfg);
      const double i = rec.intensity[static_cast<Eigen::Index>(j)];
      log.sdf += sdf_loss(d, label, cfg.sigmoid_scale);
      log.intensity += intensity_loss(i, s.intensity_label);
      dd[j] = sdf_loss_grad(d, label, cfg.sigmoid_scale) * inv_b;
      di[j] = cfg.intensity_weight * intensity_loss_grad(i, s.intensity_label) * inv_b;
    }
    log.sdf *= inv_b;
    log.intensity *= inv_b;
    log.total = log.sdf + cfg.intensity_weight * log.intensity;

    if (!std::isfinite(log.total)) {
      model = std::move(snapshot);
      throw TrainingDiverged(it, snapshot_iteration);
    }

    BackwardOptions bopt;
    bopt.sdf = sdf_phase;
    bopt.intensity = train_intensity;
    model.backward(rec, dd, di, bopt);
    if (sdf_phase) {
      ++sdf_step;
      model.sdf_net().adam_step(adam, sdf_step);
      model.grid().adam_step(adam, sdf_step);
    }
    if (train_intensity) {
      ++intensity_step;
      model.intensity_net().adam_step(adam, intensity_step);
    }

    report.log.push_back(log);
    if (progress) progress(log);

    if ((it + 1) % cfg.snapshot_every == 0) {
      if (!model.all_finite()) {
        model = std::move(snapshot);
        throw TrainingDiverged(it, snapshot_iteration);
      }
      snapshot = model;
      snapshot_iteration = it + 1;
    }
  }

  report.grid_entries = model.grid().entry_count();
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace radarfield
