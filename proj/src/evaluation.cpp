#include "radarfield/evaluation.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

namespace radarfield {

std::vector<Vec3> sample_mesh(const TriangleMesh& mesh, std::size_t n, std::uint64_t seed) {
  if (mesh.triangles.empty()) throw std::invalid_argument("sample_mesh: empty mesh");
  mesh.validate();
  std::vector<double> cdf(mesh.triangles.size());
  double total = 0.0;
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    total += mesh.face_area(t);
    cdf[t] = total;
  }
  if (!(total > 0.0)) throw std::invalid_argument("sample_mesh: mesh has zero area");
  std::mt19937_64 rng(seed);
  auto unit = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  std::vector<Vec3> out;
  out.reserve(n);
  for (std::size_t s = 0; s < n; ++s) {
    const double pick = unit() * total;
    const auto t = static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), pick) - cdf.begin());
    const auto& f = mesh.triangles[std::min(t, cdf.size() - 1)];
    const double r1 = std::sqrt(unit()), r2 = unit();
    const Vec3& a = mesh.vertices[f[0]];
    const Vec3& b = mesh.vertices[f[1]];
    const Vec3& c = mesh.vertices[f[2]];
    out.push_back((1.0 - r1) * a + r1 * (1.0 - r2) * b + r1 * r2 * c);
  }
  return out;
}

void MetricThresholds::validate() const {
  if (!(tau > 0.0) || !(discard > 0.0) || !(truncation > 0.0) || !(cell_size > 0.0))
    throw std::invalid_argument("metrics: thresholds must be positive");
}

std::vector<Vec3> restrict_to_box(std::span<const Vec3> points, const Aabb& box) {
  std::vector<Vec3> out;
  for (const Vec3& p : points)
    if (box.contains(p)) out.push_back(p);
  return out;
}

AccuracyMetrics accuracy_metrics(std::span<const Vec3> samples, std::span<const Vec3> gt, const Aabb& box,
                                 const MetricThresholds& thr, NnMethod method) {
  thr.validate();
  const auto s = restrict_to_box(samples, box);
  const auto g = restrict_to_box(gt, box);
  if (g.empty()) throw std::invalid_argument("accuracy_metrics: no ground-truth points inside the box");
  if (s.empty()) throw std::invalid_argument("accuracy_metrics: no mesh samples inside the box");
  const auto dist = nearest_distances(s, g, method, thr.cell_size);
  AccuracyMetrics m;
  m.count = s.size();
  double sum = 0.0;
  std::size_t kept = 0, within = 0;
  for (double d : dist) {
    if (d <= thr.discard) {
      sum += d;
      ++kept;
    }
    if (d <= thr.tau) ++within;
  }
  const double n = static_cast<double>(s.size());
  m.error = kept > 0 ? sum / static_cast<double>(kept) : thr.discard;
  m.ratio = 100.0 * static_cast<double>(within) / n;
  m.outlier_ratio = 100.0 * static_cast<double>(s.size() - kept) / n;
  return m;
}

CompletionMetrics completion_metrics(std::span<const Vec3> gt, std::span<const Vec3> samples, const Aabb& box,
                                     const MetricThresholds& thr, NnMethod method) {
  thr.validate();
  const auto g = restrict_to_box(gt, box);
  const auto s = restrict_to_box(samples, box);
  if (g.empty()) throw std::invalid_argument("completion_metrics: no ground-truth points inside the box");
  if (s.empty()) throw std::invalid_argument("completion_metrics: no mesh samples inside the box");
  const auto dist = nearest_distances(g, s, method, thr.cell_size);
  CompletionMetrics m;
  m.count = g.size();
  double sum = 0.0;
  std::size_t within = 0;
  for (double d : dist) {
    sum += std::min(d, thr.truncation);
    if (d <= thr.tau) ++within;
  }
  const double n = static_cast<double>(g.size());
  m.error = sum / n;
  m.ratio = 100.0 * static_cast<double>(within) / n;
  return m;
}

double f_score(double a, double c) {
  if (a + c <= 0.0) return 0.0;
  return 2.0 * a * c / (a + c);
}

std::vector<double> adjacent_angles(const TriangleMesh& mesh) {
  std::map<std::pair<std::uint32_t, std::uint32_t>, std::vector<std::size_t>> edges;
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& f = mesh.triangles[t];
    for (int k = 0; k < 3; ++k) {
      const auto a = f[k], b = f[(k + 1) % 3];
      edges[{std::min(a, b), std::max(a, b)}].push_back(t);
    }
  }
  std::vector<double> angles;
  for (const auto& [e, faces] : edges) {
    if (faces.size() != 2) continue;
    const Vec3 n1 = mesh.face_normal(faces[0]).normalized();
    const Vec3 n2 = mesh.face_normal(faces[1]).normalized();
    // atan2 keeps precision near 0 and pi.
    angles.push_back(std::atan2(n1.cross(n2).norm(), n1.dot(n2)));
  }
  return angles;
}

Histogram histogram(std::span<const double> values, double lo, double hi, int bins) {
  if (bins < 1 || !(hi > lo)) throw std::invalid_argument("histogram: bad range");
  Histogram h;
  h.counts.assign(static_cast<std::size_t>(bins), 0);
  for (int b = 0; b <= bins; ++b) h.edges.push_back(lo + (hi - lo) * b / bins);
  for (double v : values) {
    if (v < lo || v > hi) continue;
    auto b = static_cast<long>((v - lo) / (hi - lo) * bins);
    b = std::clamp(b, 0L, static_cast<long>(bins) - 1);
    ++h.counts[static_cast<std::size_t>(b)];
  }
  return h;
}

std::string histogram_csv(const Histogram& h) {
  std::ostringstream os;
  os.precision(17);
  os << "bin_lo,bin_hi,count\n";
  for (std::size_t b = 0; b < h.counts.size(); ++b) os << h.edges[b] << ',' << h.edges[b + 1] << ',' << h.counts[b] << '\n';
  return os.str();
}

IntensityErrors intensity_errors(std::span<const double> predicted, std::span<const double> measured) {
  if (predicted.size() != measured.size()) throw std::invalid_argument("intensity_errors: size mismatch");
  if (predicted.empty()) throw std::invalid_argument("intensity_errors: no held-out points");
  std::vector<double> err(predicted.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < err.size(); ++i) {
    err[i] = std::abs(predicted[i] - measured[i]);
    sum += err[i];
  }
  std::sort(err.begin(), err.end());
  const std::size_t n = err.size();
  IntensityErrors e;
  e.count = n;
  e.mae = sum / static_cast<double>(n);
  e.medae = n % 2 == 1 ? err[n / 2] : 0.5 * (err[n / 2 - 1] + err[n / 2]);
  return e;
}

std::string ReconstructionMetrics::to_json() const {
  nlohmann::ordered_json j;
  j["acc_error"] = accuracy.error;
  j["acc_ratio"] = accuracy.ratio;
  j["acc_outlier_ratio"] = accuracy.outlier_ratio;
  j["comp_error"] = completion.error;
  j["comp_ratio"] = completion.ratio;
  j["f_score"] = f_score;
  if (gamma) {
    j["gamma_shape"] = gamma->shape;
    j["gamma_mean"] = gamma->mean;
    j["gamma_variance"] = gamma->variance;
  } else {
    j["gamma_shape"] = nullptr;
    j["gamma_mean"] = nullptr;
    j["gamma_variance"] = nullptr;
  }
  j["map_size"] = map_size;
  j["mesh_samples"] = mesh_samples;
  j["gt_points"] = gt_points;
  if (intensity) {
    j["intensity_mae"] = intensity->mae;
    j["intensity_medae"] = intensity->medae;
    j["intensity_points"] = intensity->count;
  }
  return j.dump(2) + "\n";
}

std::string ReconstructionMetrics::to_csv() const {
  std::ostringstream os;
  os.precision(10);
  os << "acc_error,acc_ratio,acc_outlier_ratio,comp_error,comp_ratio,f_score,gamma_shape,gamma_mean,gamma_variance,"
        "map_size\n";
  os << accuracy.error << ',' << accuracy.ratio << ',' << accuracy.outlier_ratio << ',' << completion.error << ','
     << completion.ratio << ',' << f_score << ',';
  if (gamma) os << gamma->shape << ',' << gamma->mean << ',' << gamma->variance;
  else os << ",,";
  os << ',' << map_size << '\n';
  return os.str();
}

ReconstructionMetrics evaluate_mesh(const TriangleMesh& mesh, std::span<const Vec3> gt, const Aabb& box,
                                    const EvalConfig& cfg) {
  ReconstructionMetrics m;
  const auto samples = sample_mesh(mesh, cfg.mesh_samples, cfg.seed);
  m.accuracy = accuracy_metrics(samples, gt, box, cfg.thresholds, cfg.method);
  m.completion = completion_metrics(gt, samples, box, cfg.thresholds, cfg.method);
  m.f_score = f_score(m.accuracy.ratio, m.completion.ratio);
  const auto angles = adjacent_angles(mesh);
  if (angles.size() >= 10) m.gamma = gamma_fit(angles);
  m.mesh_samples = m.accuracy.count;
  m.gt_points = m.completion.count;
  return m;
}

namespace {

std::vector<double> ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[order[k]] = avg;
    i = j + 1;
  }
  return r;
}

}  // namespace

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("spearman: size mismatch");
  if (x.size() < 2) throw std::invalid_argument("spearman: need at least two pairs");
  const auto rx = ranks(x), ry = ranks(y);
  const double n = static_cast<double>(x.size());
  const double mean = 0.5 * (n + 1.0);
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mean) * (ry[i] - mean);
    sxx += (rx[i] - mean) * (rx[i] - mean);
    syy += (ry[i] - mean) * (ry[i] - mean);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace radarfield
