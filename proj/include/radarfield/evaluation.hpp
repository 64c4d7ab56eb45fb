#pragma once

#include "radarfield/gamma_fit.hpp"
#include "radarfield/mesh.hpp"
#include "radarfield/nearest_neighbor.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace radarfield {

/// Area-weighted triangle choice plus uniform barycentric sampling.
std::vector<Vec3> sample_mesh(const TriangleMesh& mesh, std::size_t n, std::uint64_t seed);

struct MetricThresholds {
  double tau = 0.2;          // ratio threshold
  double discard = 0.4;      // accuracy outlier distance
  double truncation = 2.0;   // completion cap
  double cell_size = 0.2;    // nearest-neighbour index cell
  void validate() const;
};

struct AccuracyMetrics {
  double error = 0.0;          // metres, mean over non-discarded samples
  double ratio = 0.0;          // %, of all samples
  double outlier_ratio = 0.0;  // %
  std::size_t count = 0;
};

struct CompletionMetrics {
  double error = 0.0;  // metres, distances capped at truncation
  double ratio = 0.0;  // %
  std::size_t count = 0;
};

/// Keeps the points inside `box`.
std::vector<Vec3> restrict_to_box(std::span<const Vec3> points, const Aabb& box);

/// Mesh samples -> ground truth. Both sets are restricted to `box` first.
AccuracyMetrics accuracy_metrics(std::span<const Vec3> samples, std::span<const Vec3> gt, const Aabb& box,
                                 const MetricThresholds& thr = {}, NnMethod method = NnMethod::Indexed);
/// Ground truth -> mesh samples.
CompletionMetrics completion_metrics(std::span<const Vec3> gt, std::span<const Vec3> samples, const Aabb& box,
                                     const MetricThresholds& thr = {}, NnMethod method = NnMethod::Indexed);

/// Harmonic mean 2ac / (a + c); 0 when both are 0.
double f_score(double acc_ratio, double comp_ratio);

/// Angle between the face normals across every interior edge shared by
/// exactly two triangles, in radians.
std::vector<double> adjacent_angles(const TriangleMesh& mesh);

struct Histogram {
  std::vector<double> edges;  // bins + 1
  std::vector<std::size_t> counts;
};
Histogram histogram(std::span<const double> values, double lo, double hi, int bins);
std::string histogram_csv(const Histogram& h);

struct IntensityErrors {
  double mae = 0.0;
  double medae = 0.0;
  std::size_t count = 0;
};
/// MAE and MedAE; the median of an even count is the mean of the two middle values.
IntensityErrors intensity_errors(std::span<const double> predicted, std::span<const double> measured);

/// Spearman rank correlation (tied values share their average rank). Throws
/// for fewer than two pairs or mismatched lengths; 0 if either side is constant.
double spearman(std::span<const double> x, std::span<const double> y);

struct ReconstructionMetrics {
  AccuracyMetrics accuracy;
  CompletionMetrics completion;
  double f_score = 0.0;
  std::optional<GammaFit> gamma;  // absent for meshes with fewer than 10 interior edges
  std::size_t map_size = 0;       // bytes
  std::size_t mesh_samples = 0;
  std::size_t gt_points = 0;
  std::optional<IntensityErrors> intensity;

  /// Pretty-printed JSON with fixed key order.
  std::string to_json() const;
  std::string to_csv() const;
};

struct EvalConfig {
  std::size_t mesh_samples = 100000;
  std::uint64_t seed = 7;
  MetricThresholds thresholds;
  NnMethod method = NnMethod::Indexed;
};

ReconstructionMetrics evaluate_mesh(const TriangleMesh& mesh, std::span<const Vec3> gt, const Aabb& box,
                                    const EvalConfig& cfg);

}  // namespace radarfield
