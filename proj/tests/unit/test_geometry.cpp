#include "radarfield/geometry.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

using namespace radarfield;

namespace {

PointCloudFrame frame_with(std::vector<Vec3> pts, const Pose& pose = {}, double t = 0.0) {
  PointCloudFrame f;
  f.timestamp = t;
  f.sensor_pose = pose;
  f.points = std::move(pts);
  for (std::size_t i = 0; i < f.points.size(); ++i) f.intensities.push_back(70.0 + static_cast<double>(i));
  return f;
}

Pose random_pose(std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Quat q(g(rng), g(rng), g(rng), g(rng));
  return Pose(q, Vec3(g(rng), g(rng), g(rng)) * 5.0);
}

}  // namespace

TEST(Pose, NormalizesAndComposesWithInverseToIdentity) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 50; ++i) {
    const Pose p = random_pose(rng);
    EXPECT_NEAR(p.rotation.norm(), 1.0, 1e-9);
    const Pose id = p * p.inverse();
    EXPECT_NEAR(id.rotation.angularDistance(Quat::Identity()), 0.0, 1e-9);
    EXPECT_LT(id.translation.norm(), 1e-9);
  }
}

TEST(TransformToWorld, IdentityPose) {
  const auto w = transform_to_world(frame_with({Vec3(1, 2, 3)}));
  EXPECT_EQ(w.points[0], Vec3(1, 2, 3));
}

TEST(TransformToWorld, NinetyDegreeYaw) {
  const Pose yaw(Quat(Eigen::AngleAxisd(std::numbers::pi / 2, Vec3::UnitZ())), Vec3::Zero());
  const auto w = transform_to_world(frame_with({Vec3(1, 0, 0)}, yaw));
  EXPECT_NEAR((w.points[0] - Vec3(0, 1, 0)).norm(), 0.0, 1e-15);
}

TEST(TransformToWorld, PureTranslationRecordsOrigin) {
  const Pose t(Quat::Identity(), Vec3(1, 1, 1));
  const auto w = transform_to_world(frame_with({Vec3(0, 0, 0)}, t));
  EXPECT_EQ(w.points[0], Vec3(1, 1, 1));
  ASSERT_EQ(w.origins.size(), 1u);
  EXPECT_EQ(w.origins[0], Vec3(1, 1, 1));
  EXPECT_TRUE(w.in_world());
  EXPECT_EQ(w.intensities, std::vector<double>{70.0});
}

TEST(TransformToWorld, InverseRoundTrip) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-30, 30);
  for (int k = 0; k < 20; ++k) {
    const Pose pose = random_pose(rng);
    std::vector<Vec3> pts;
    for (int i = 0; i < 50; ++i) pts.emplace_back(u(rng), u(rng), u(rng));
    const auto w = transform_to_world(frame_with(pts, pose));
    const Pose inv = pose.inverse();
    for (std::size_t i = 0; i < pts.size(); ++i) EXPECT_LT((inv.apply(w.points[i]) - pts[i]).norm(), 1e-9);
  }
}

TEST(TransformToWorld, ReportsEveryNonFinitePoint) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const double inf = std::numeric_limits<double>::infinity();
  const auto f = frame_with({Vec3(1, 0, 0), Vec3(nan, 0, 0), Vec3(2, 0, 0), Vec3(0, inf, 0)});
  try {
    transform_to_world(f);
    FAIL() << "expected InvalidFrameError";
  } catch (const InvalidFrameError& e) {
    ASSERT_EQ(e.points().size(), 2u);
    EXPECT_EQ(e.points()[0].index, 1u);
    EXPECT_EQ(e.points()[1].index, 3u);
  }
}

TEST(NearFieldFilter, RemovesCloseAndBoundaryPoints) {
  const auto f = frame_with({Vec3(1.0, 0, 0), Vec3(2.5, 0, 0), Vec3(0, 2.6, 0)});
  const auto out = near_field_filter(f, 2.5);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out.points[0], Vec3(0, 2.6, 0));
  EXPECT_EQ(out.intensities[0], 72.0);
}

TEST(NearFieldFilter, KeepsOnlyFarPoints) {
  const auto out = near_field_filter(frame_with({Vec3(0.5, 0, 0), Vec3(0, 0, 3.0)}), 1.0);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out.points[0].norm(), 3.0);
}

TEST(NearFieldFilter, Idempotent) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-5, 5);
  std::vector<Vec3> pts;
  for (int i = 0; i < 200; ++i) pts.emplace_back(u(rng), u(rng), u(rng));
  const auto once = near_field_filter(frame_with(pts), 2.5);
  const auto twice = near_field_filter(once, 2.5);
  EXPECT_EQ(once.points, twice.points);
  EXPECT_EQ(once.intensities, twice.intensities);
}

TEST(NearFieldFilter, EmptyResultIsLegal) {
  EXPECT_EQ(near_field_filter(frame_with({Vec3(0.1, 0, 0)}), 2.5).size(), 0u);
}

namespace {
std::vector<PointCloudFrame> numbered_frames(int n) {
  std::vector<PointCloudFrame> frames;
  for (int i = 0; i < n; ++i)
    frames.push_back(frame_with({Vec3(i + 3.0, 0, 0), Vec3(0, i + 3.0, 1)},
                                Pose(Quat::Identity(), Vec3(0, 0, i)), 0.1 * i));
  return frames;
}
}  // namespace

TEST(AccumulateFrames, GroupsOfFive) {
  EXPECT_EQ(accumulate_frames(numbered_frames(10), 5).size(), 2u);
  const auto seven = accumulate_frames(numbered_frames(7), 5);
  ASSERT_EQ(seven.size(), 2u);
  EXPECT_EQ(seven[0].size(), 10u);
  EXPECT_EQ(seven[1].size(), 4u);
}

TEST(AccumulateFrames, KOneKeepsFrames) {
  const auto frames = numbered_frames(4);
  const auto out = accumulate_frames(frames, 1);
  ASSERT_EQ(out.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) {
    const auto w = transform_to_world(frames[i]);
    EXPECT_EQ(out[i].points, w.points);
    EXPECT_EQ(out[i].intensities, w.intensities);
  }
}

TEST(AccumulateFrames, KLargerThanCountMergesAll) {
  const auto out = accumulate_frames(numbered_frames(3), 10);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].size(), 6u);
}

TEST(AccumulateFrames, PreservesPointCountAndOrigins) {
  const auto frames = numbered_frames(13);
  for (std::size_t k : {1u, 2u, 5u, 13u, 20u}) {
    std::size_t total = 0;
    for (const auto& f : accumulate_frames(frames, k)) {
      total += f.size();
      ASSERT_EQ(f.origins.size(), f.size());
      for (std::size_t i = 0; i < f.size(); ++i) {
        // Each point remembers the pose translation of the frame it came from.
        const double z = f.origins[i].z();
        EXPECT_EQ(z, std::round(z));
      }
    }
    EXPECT_EQ(total, 26u);
  }
}

TEST(AccumulateFrames, OverlappingWindows) {
  const auto out = accumulate_frames(numbered_frames(7), 5, true);
  EXPECT_EQ(out.size(), 3u);
  for (const auto& f : out) EXPECT_EQ(f.size(), 10u);
}

TEST(Intensity, NormalizationExamples) {
  const IntensityRange r{64, 118};
  EXPECT_EQ(r.normalize(64), 0.0);
  EXPECT_EQ(r.normalize(91), 0.5);
  EXPECT_EQ((IntensityRange{80, 128}.normalize(130)), 1.0);
  EXPECT_EQ((IntensityRange{80, 128}.normalize(10)), 0.0);
}

TEST(Intensity, MonotoneAndInvertible) {
  const IntensityRange r{64, 118};
  double prev = -1.0;
  for (double i = 64; i <= 118; i += 0.25) {
    const double n = r.normalize(i);
    EXPECT_GT(n, prev);
    prev = n;
    EXPECT_NEAR(r.denormalize(n), i, 1e-12);
  }
}

TEST(Intensity, RoundedDatasetRange) {
  std::vector<PointCloudFrame> frames(2);
  frames[0].points = {Vec3(3, 0, 0), Vec3(4, 0, 0)};
  frames[0].intensities = {64.4, 100.0};
  frames[1].points = {Vec3(3, 0, 0)};
  frames[1].intensities = {117.2};
  const auto r = intensity_range(frames);
  EXPECT_EQ(r.min, 64.0);
  EXPECT_EQ(r.max, 118.0);
  const auto n = normalize_intensities(frames, r);
  EXPECT_NEAR(n[1].intensities[0], (117.2 - 64.0) / 54.0, 1e-15);
}

TEST(Aabb, BasicOperations) {
  Aabb b = Aabb::empty();
  EXPECT_FALSE(b.valid());
  b.expand(Vec3(1, 2, 3));
  b.expand(Vec3(-1, 0, 5));
  EXPECT_TRUE(b.valid());
  EXPECT_EQ(b.min, Vec3(-1, 0, 3));
  EXPECT_EQ(b.max, Vec3(1, 2, 5));
  EXPECT_TRUE(b.contains(Vec3(0, 1, 4)));
  EXPECT_FALSE(b.contains(Vec3(0, 3, 4)));
  EXPECT_EQ(b.padded(1.0).min, Vec3(-2, -1, 2));
  EXPECT_EQ(b.clamp(Vec3(5, -5, 4)), Vec3(1, 0, 4));
}
