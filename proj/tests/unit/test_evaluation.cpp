#include "radarfield/evaluation.hpp"

#include <gtest/gtest.h>

#include <boost/math/special_functions/digamma.hpp>
#include <json.hpp>

#include <map>
#include <numbers>
#include <random>

using namespace radarfield;

namespace {

TriangleMesh unit_square() {
  TriangleMesh m;
  m.vertices = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(1, 1, 0), Vec3(0, 1, 0)};
  m.triangles = {{0, 1, 2}, {0, 2, 3}};
  return m;
}

TriangleMesh cube() {
  TriangleMesh m;
  for (int c = 0; c < 8; ++c) m.vertices.emplace_back(c & 1, (c >> 1) & 1, (c >> 2) & 1);
  const std::array<std::array<std::uint32_t, 4>, 6> quads{{
      {0, 2, 3, 1}, {4, 5, 7, 6}, {0, 1, 5, 4}, {2, 6, 7, 3}, {0, 4, 6, 2}, {1, 3, 7, 5}}};
  for (const auto& q : quads) {
    m.triangles.push_back({q[0], q[1], q[2]});
    m.triangles.push_back({q[0], q[2], q[3]});
  }
  return m;
}

TriangleMesh icosphere(int subdivisions) {
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  TriangleMesh m;
  for (const auto& v : {Vec3(-1, t, 0), Vec3(1, t, 0), Vec3(-1, -t, 0), Vec3(1, -t, 0), Vec3(0, -1, t),
                        Vec3(0, 1, t), Vec3(0, -1, -t), Vec3(0, 1, -t), Vec3(t, 0, -1), Vec3(t, 0, 1),
                        Vec3(-t, 0, -1), Vec3(-t, 0, 1)})
    m.vertices.push_back(v.normalized());
  m.triangles = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
                 {11, 10, 2}, {10, 7, 6}, {7, 1, 8},  {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
                 {3, 8, 9},  {4, 9, 5},  {2, 4, 11}, {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
  for (int s = 0; s < subdivisions; ++s) {
    std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint32_t> mid;
    auto midpoint = [&](std::uint32_t a, std::uint32_t b) {
      const auto key = std::minmax(a, b);
      auto it = mid.find(key);
      if (it != mid.end()) return it->second;
      m.vertices.push_back((m.vertices[a] + m.vertices[b]).normalized());
      const auto idx = static_cast<std::uint32_t>(m.vertices.size() - 1);
      mid.emplace(key, idx);
      return idx;
    };
    std::vector<std::array<std::uint32_t, 3>> next;
    for (const auto& tri : m.triangles) {
      const auto a = midpoint(tri[0], tri[1]), b = midpoint(tri[1], tri[2]), c = midpoint(tri[2], tri[0]);
      next.push_back({tri[0], a, c});
      next.push_back({tri[1], b, a});
      next.push_back({tri[2], c, b});
      next.push_back({a, b, c});
    }
    m.triangles = std::move(next);
  }
  return m;
}

std::vector<Vec3> random_points(std::mt19937_64& rng, std::size_t n, double extent) {
  std::uniform_real_distribution<double> u(-extent, extent);
  std::vector<Vec3> p;
  for (std::size_t i = 0; i < n; ++i) p.emplace_back(u(rng), u(rng), u(rng));
  return p;
}

const Aabb kBig(Vec3::Constant(-100), Vec3::Constant(100));

}  // namespace

TEST(SampleMesh, SamplesStayInsideSingleTriangle) {
  TriangleMesh m;
  m.vertices = {Vec3(0, 0, 0), Vec3(2, 0, 0), Vec3(0, 1, 0)};
  m.triangles = {{0, 1, 2}};
  for (const auto& p : sample_mesh(m, 10000, 1)) {
    EXPECT_GE(p.x(), 0.0);
    EXPECT_GE(p.y(), 0.0);
    EXPECT_LE(p.x() / 2.0 + p.y(), 1.0 + 1e-12);
    EXPECT_EQ(p.z(), 0.0);
  }
}

TEST(SampleMesh, AreaProportionalSplit) {
  TriangleMesh m;
  m.vertices = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 2, 0), Vec3(10, 0, 0), Vec3(13, 0, 0), Vec3(10, 2, 0)};
  m.triangles = {{0, 1, 2}, {3, 4, 5}};  // areas 1 and 3
  const std::size_t n = 100000;
  std::size_t first = 0;
  for (const auto& p : sample_mesh(m, n, 2)) first += p.x() < 5.0;
  const double sigma = std::sqrt(n * 0.25 * 0.75);
  EXPECT_NEAR(static_cast<double>(first), 0.25 * n, 3 * sigma);
}

TEST(SampleMesh, UnitSquareMean) {
  const auto s = sample_mesh(unit_square(), 1000000, 3);
  Vec3 mean = Vec3::Zero();
  for (const auto& p : s) mean += p;
  mean /= static_cast<double>(s.size());
  EXPECT_NEAR(mean.x(), 0.5, 0.002);
  EXPECT_NEAR(mean.y(), 0.5, 0.002);
}

TEST(SampleMesh, DeterministicAndRejectsEmpty) {
  EXPECT_EQ(sample_mesh(unit_square(), 100, 4), sample_mesh(unit_square(), 100, 4));
  EXPECT_NE(sample_mesh(unit_square(), 100, 4), sample_mesh(unit_square(), 100, 5));
  EXPECT_THROW(sample_mesh(TriangleMesh{}, 10, 1), std::invalid_argument);
}

TEST(SampleMesh, ChiSquareOnLargeMesh) {
  const auto m = icosphere(2);  // 320 triangles of unequal area
  const std::size_t n = 320000;
  double total = 0;
  for (std::size_t t = 0; t < m.triangles.size(); ++t) total += m.face_area(t);
  // Attribute each sample to the triangle whose plane it lies in and whose
  // barycentric coordinates are all non-negative.
  std::vector<double> counts(m.triangles.size(), 0.0);
  for (const auto& p : sample_mesh(m, n, 5)) {
    for (std::size_t t = 0; t < m.triangles.size(); ++t) {
      const Vec3 a = m.vertices[m.triangles[t][0]], b = m.vertices[m.triangles[t][1]], c = m.vertices[m.triangles[t][2]];
      const Vec3 nrm = (b - a).cross(c - a);
      if (std::abs(nrm.normalized().dot(p - a)) > 1e-9) continue;
      const double w0 = (c - b).cross(p - b).dot(nrm), w1 = (a - c).cross(p - c).dot(nrm),
                   w2 = (b - a).cross(p - a).dot(nrm);
      if (w0 >= -1e-12 && w1 >= -1e-12 && w2 >= -1e-12) {
        counts[t] += 1;
        break;
      }
    }
  }
  double chi2 = 0;
  for (std::size_t t = 0; t < counts.size(); ++t) {
    const double e = n * m.face_area(t) / total;
    chi2 += (counts[t] - e) * (counts[t] - e) / e;
  }
  EXPECT_LT(chi2, 400.0);  // 319 dof, p ~ 0.001
}

TEST(NearestNeighbor, IndexedEqualsBruteForceExactly) {
  std::mt19937_64 rng(6);
  for (int inst = 0; inst < 50; ++inst) {
    const auto pts = random_points(rng, 1 + rng() % 1000, 1.0 + (inst % 5));
    const auto q = random_points(rng, 200, 3.0 + (inst % 5));
    const double cell = 0.05 + 0.1 * (inst % 4);
    const auto a = nearest_distances(q, pts, NnMethod::Indexed, cell);
    const auto b = nearest_distances(q, pts, NnMethod::BruteForce, cell);
    const auto c = nearest_distances_serial(q, pts, cell);
    EXPECT_EQ(a, b);
    EXPECT_EQ(a, c);
  }
}

TEST(NearestNeighbor, EmptyIndexAndMaxRadius) {
  VoxelHashIndex empty({}, 0.2);
  EXPECT_TRUE(std::isinf(empty.nearest_distance(Vec3::Zero())));
  std::vector<Vec3> pts{Vec3(5, 0, 0)};
  VoxelHashIndex idx(pts, 0.2);
  EXPECT_TRUE(std::isinf(idx.nearest_distance(Vec3::Zero(), 1.0)));
  EXPECT_EQ(idx.nearest_distance(Vec3::Zero()), 5.0);
}

TEST(Metrics, IdenticalSetsArePerfect) {
  std::mt19937_64 rng(7);
  const auto a = random_points(rng, 500, 2);
  const auto acc = accuracy_metrics(a, a, kBig);
  EXPECT_EQ(acc.error, 0.0);
  EXPECT_EQ(acc.ratio, 100.0);
  EXPECT_EQ(acc.outlier_ratio, 0.0);
  const auto comp = completion_metrics(a, a, kBig);
  EXPECT_EQ(comp.error, 0.0);
  EXPECT_EQ(comp.ratio, 100.0);
}

TEST(Metrics, AccuracyExample) {
  const std::vector<Vec3> gt{Vec3::Zero()};
  const std::vector<Vec3> samples{Vec3(0.5, 0, 0), Vec3(0.1, 0, 0)};
  const auto acc = accuracy_metrics(samples, gt, kBig);
  EXPECT_DOUBLE_EQ(acc.error, 0.1);
  EXPECT_DOUBLE_EQ(acc.outlier_ratio, 50.0);
  EXPECT_DOUBLE_EQ(acc.ratio, 50.0);
}

TEST(Metrics, CompletionTruncates) {
  const std::vector<Vec3> gt{Vec3(5, 0, 0), Vec3(0.1, 0, 0)};
  const std::vector<Vec3> samples{Vec3::Zero()};
  const auto comp = completion_metrics(gt, samples, kBig);
  EXPECT_DOUBLE_EQ(comp.error, (2.0 + 0.1) / 2);
  EXPECT_DOUBLE_EQ(comp.ratio, 50.0);
}

TEST(Metrics, EmptyInputsAreErrors) {
  const std::vector<Vec3> a{Vec3::Zero()};
  EXPECT_THROW(accuracy_metrics(a, {}, kBig), std::invalid_argument);
  EXPECT_THROW(completion_metrics({}, a, kBig), std::invalid_argument);
  EXPECT_THROW(completion_metrics(a, {}, kBig), std::invalid_argument);
}

TEST(Metrics, PointsOutsideBoxContributeNothing) {
  const Aabb box(Vec3::Constant(-1), Vec3::Constant(1));
  const std::vector<Vec3> gt{Vec3::Zero(), Vec3(50, 0, 0)};
  const std::vector<Vec3> samples{Vec3(0.05, 0, 0), Vec3(-60, 0, 0)};
  const auto acc = accuracy_metrics(samples, gt, box);
  EXPECT_EQ(acc.count, 1u);
  EXPECT_DOUBLE_EQ(acc.error, 0.05);
  const auto comp = completion_metrics(gt, samples, box);
  EXPECT_EQ(comp.count, 1u);
  EXPECT_DOUBLE_EQ(comp.error, 0.05);
}

TEST(Metrics, MatchesBruteForceOracle) {
  std::mt19937_64 rng(8);
  for (int inst = 0; inst < 30; ++inst) {
    const auto gt = random_points(rng, 800, 1.5);
    const auto s = random_points(rng, 900, 1.8);
    const Aabb box(Vec3::Constant(-1.6), Vec3::Constant(1.6));
    const auto a = accuracy_metrics(s, gt, box, {}, NnMethod::Indexed);
    const auto b = accuracy_metrics(s, gt, box, {}, NnMethod::BruteForce);
    EXPECT_EQ(a.error, b.error);
    EXPECT_EQ(a.ratio, b.ratio);
    EXPECT_EQ(a.outlier_ratio, b.outlier_ratio);
    const auto c = completion_metrics(gt, s, box, {}, NnMethod::Indexed);
    const auto d = completion_metrics(gt, s, box, {}, NnMethod::BruteForce);
    EXPECT_EQ(c.error, d.error);
    EXPECT_EQ(c.ratio, d.ratio);
  }
}

TEST(FScore, Examples) {
  EXPECT_EQ(f_score(100, 100), 100.0);
  EXPECT_EQ(f_score(0, 50), 0.0);
  EXPECT_EQ(f_score(0, 0), 0.0);
  EXPECT_NEAR(f_score(73.6180, 66.2283), 69.7279, 0.01);
}

TEST(FScore, SymmetricAndBounded) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0, 100);
  for (int t = 0; t < 1000; ++t) {
    const double a = u(rng), c = u(rng);
    EXPECT_EQ(f_score(a, c), f_score(c, a));
    EXPECT_LE(f_score(a, c), std::max(a, c));
  }
}

TEST(AdjacentAngles, FlatQuad) {
  const auto a = adjacent_angles(unit_square());
  ASSERT_EQ(a.size(), 1u);
  EXPECT_NEAR(a[0], 0.0, 1e-15);
}

TEST(AdjacentAngles, Cube) {
  const auto a = adjacent_angles(cube());
  EXPECT_EQ(a.size(), 18u);
  int right = 0, flat = 0;
  for (double x : a) {
    if (std::abs(x - std::numbers::pi / 2) < 1e-12) ++right;
    if (std::abs(x) < 1e-12) ++flat;
  }
  EXPECT_EQ(right, 12);
  EXPECT_EQ(flat, 6);
}

TEST(AdjacentAngles, ShrinkWithSubdivision) {
  double prev = 1e9;
  for (int k = 0; k <= 3; ++k) {
    const auto a = adjacent_angles(icosphere(k));
    double mean = 0;
    for (double x : a) mean += x;
    mean /= static_cast<double>(a.size());
    EXPECT_LT(mean, prev);
    prev = mean;
  }
}

TEST(GammaFit, RecoversShapeAndScale) {
  std::mt19937_64 rng(10);
  for (const auto& [k, theta] : {std::pair{2.0, 0.5}, std::pair{1.0, 0.5}, std::pair{0.7, 0.4}}) {
    std::gamma_distribution<double> g(k, theta);
    std::vector<double> x(100000);
    for (auto& v : x) v = g(rng);
    const auto fit = gamma_fit(x);
    EXPECT_TRUE(fit.converged);
    EXPECT_NEAR(fit.shape, k, 0.05 * k);
    EXPECT_NEAR(fit.scale, theta, 0.05 * theta);
    EXPECT_NEAR(fit.mean, k * theta, 0.05 * k * theta);
    EXPECT_DOUBLE_EQ(fit.mean, fit.shape * fit.scale);
    EXPECT_DOUBLE_EQ(fit.variance, fit.shape * fit.scale * fit.scale);
    // Independent check of the stationarity condition.
    double m = 0, ml = 0;
    for (double v : x) m += v, ml += std::log(v);
    m /= x.size();
    ml /= x.size();
    EXPECT_LT(std::abs(std::log(fit.shape) - boost::math::digamma(fit.shape) - (std::log(m) - ml)), 1e-8);
  }
}

TEST(GammaFit, ErrorsAndZeroClamp) {
  EXPECT_THROW(gamma_fit(std::vector<double>(9, 1.0)), std::invalid_argument);
  EXPECT_THROW(gamma_fit(std::vector<double>{1, 2, 3, 4, 5, 6, 7, 8, 9, -1}), std::invalid_argument);
  std::vector<double> with_zeros{0, 0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8};
  const auto fit = gamma_fit(with_zeros);
  EXPECT_TRUE(std::isfinite(fit.shape));
  EXPECT_GT(fit.shape, 0.0);
}

TEST(Histogram, CountsAndCsv) {
  const std::vector<double> v{0.05, 0.15, 0.15, 0.95, 1.5};
  const auto h = histogram(v, 0.0, 1.0, 10);
  EXPECT_EQ(h.edges.size(), 11u);
  EXPECT_EQ(h.counts[0], 1u);
  EXPECT_EQ(h.counts[1], 2u);
  EXPECT_EQ(h.counts[9], 1u);  // 1.5 lies outside the range and is not counted
  const auto csv = histogram_csv(h);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "bin_lo,bin_hi,count");
}

TEST(IntensityErrors, Examples) {
  const std::vector<double> m{10, 20, 30};
  const auto perfect = intensity_errors(m, m);
  EXPECT_EQ(perfect.mae, 0.0);
  EXPECT_EQ(perfect.medae, 0.0);
  const std::vector<double> p{11, 22, 39};
  const auto e = intensity_errors(p, m);
  EXPECT_DOUBLE_EQ(e.mae, 4.0);
  EXPECT_DOUBLE_EQ(e.medae, 2.0);
  EXPECT_THROW(intensity_errors({}, {}), std::invalid_argument);
}

TEST(Spearman, KnownValues) {
  const std::vector<double> x{1, 2, 3, 4, 5};
  const std::vector<double> y{5, 6, 7, 8, 7};
  // Ranks of y: 1, 2, 3.5, 5, 3.5 -> rho = 0.8207826816681233
  EXPECT_NEAR(spearman(x, y), 0.8207826816681233, 1e-12);
  const std::vector<double> down{9, 7, 4, 2, 1};
  EXPECT_DOUBLE_EQ(spearman(x, down), -1.0);
}

TEST(ReconstructionMetricsReport, JsonHasStableKeysAndConsistentValues) {
  TriangleMesh m = icosphere(3);
  std::vector<Vec3> gt = sample_mesh(m, 20000, 11);
  EvalConfig cfg;
  cfg.mesh_samples = 20000;
  const auto r = evaluate_mesh(m, gt, kBig, cfg);
  const auto j = nlohmann::json::parse(r.to_json());
  for (const char* key : {"acc_error", "acc_ratio", "acc_outlier_ratio", "comp_error", "comp_ratio", "f_score",
                          "gamma_shape", "gamma_mean", "gamma_variance", "map_size"})
    EXPECT_TRUE(j.contains(key)) << key;
  EXPECT_NEAR(j["f_score"].get<double>(), f_score(r.accuracy.ratio, r.completion.ratio), 1e-9);
  EXPECT_GE(r.accuracy.ratio, 0.0);
  EXPECT_LE(r.accuracy.ratio, 100.0);
  EXPECT_EQ(r.to_json(), evaluate_mesh(m, gt, kBig, cfg).to_json());
  EXPECT_NE(r.to_csv().find("acc_error"), std::string::npos);
}
