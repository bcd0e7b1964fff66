// Copyright 2026 The lanekit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "lanekit/synthetic.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "lanekit/error.hpp"
#include "lanekit/geometry.hpp"
#include "lanekit/ingest.hpp"
#include "oracles.hpp"

namespace
{
using lanekit::Vec3;
using lanekit::synthetic::Params;
using lanekit::synthetic::PathKind;

Params params(PathKind kind, double length, double spacing)
{
  Params p;
  p.kind = kind;
  p.length = length;
  p.spacing = spacing;
  return p;
}

TEST(Synthetic, StraightHundredMetres)
{
  const auto scene = lanekit::synthetic::generate(params(PathKind::kStraight, 100.0, 1.0));
  ASSERT_EQ(scene.frames.size(), 101u);
  for (const auto & f : scene.frames) {
    EXPECT_EQ(f.rotation.matrix(), scene.frames[0].rotation.matrix());
  }
  EXPECT_NEAR((scene.frames.back().center - scene.frames.front().center).norm(), 100.0, 1e-9);
}

TEST(Synthetic, ArcMatchesIndependentConstruction)
{
  Params p = params(PathKind::kArc, 30.0, 0.5);
  p.radius = 20.0;
  const auto scene = lanekit::synthetic::generate(p);
  const auto expected = oracle::arc_frames(20.0, 0.5 / 20.0, scene.frames.size(), 1.2);
  ASSERT_EQ(scene.frames.size(), 61u);
  for (std::size_t i = 0; i < expected.size(); ++i) {
    EXPECT_LT((scene.frames[i].center - expected[i].center).norm(), 1e-9) << i;
    EXPECT_LT((scene.frames[i].rotation.matrix() - expected[i].rotation.matrix()).norm(), 1e-9);
  }
  // Ground truth is the camera's own down and forward axes.
  EXPECT_LT((scene.truth.normal - Vec3(0, 1, 0)).norm(), 1e-12);
  EXPECT_LT((scene.truth.forward - Vec3(0, 0, 1)).norm(), 1e-12);
  EXPECT_EQ(scene.truth.height, 1.2);
}

TEST(Synthetic, CamerasSitHAboveTheSurface)
{
  for (PathKind kind : {PathKind::kStraight, PathKind::kArc, PathKind::kSCurve, PathKind::kHill}) {
    const auto scene = lanekit::synthetic::generate(params(kind, 120.0, 0.7));
    for (std::size_t i = 0; i < scene.frames.size(); ++i) {
      const auto pose = scene.pose_at(scene.path_position[i]);
      const auto & f = scene.frames[i];
      EXPECT_LT((f.center - (pose.ground - 1.2 * pose.down)).norm(), 1e-9);
      const Eigen::Matrix3d m = f.rotation.matrix();
      EXPECT_LT((m.transpose() * m - Eigen::Matrix3d::Identity()).norm(), 1e-12);
      EXPECT_NEAR(m.determinant(), 1.0, 1e-12);
      EXPECT_LT((m.col(1) - pose.down).norm(), 1e-9);
      EXPECT_LT((m.col(2) - pose.forward).norm(), 1e-9);
    }
  }
}

TEST(Synthetic, HillPitchVariesAndBordersFollowSurface)
{
  Params p = params(PathKind::kHill, 160.0, 1.0);
  p.hill_amplitude = 2.0;
  p.hill_wavelength = 80.0;
  const auto scene = lanekit::synthetic::generate(p);
  const double k = 2 * std::numbers::pi / 80.0;
  double min_pitch = 1e9, max_pitch = -1e9;
  for (std::size_t i = 0; i < scene.frames.size(); ++i) {
    const Vec3 fwd = scene.frames[i].rotation.matrix().col(2);
    const double pitch = std::asin(fwd.z());
    min_pitch = std::min(min_pitch, pitch);
    max_pitch = std::max(max_pitch, pitch);
    // Plan view is straight along +x, the surface is z = A sin(k x).
    EXPECT_NEAR(fwd.y(), 0.0, 1e-12);
    const Vec3 ground = scene.frames[i].center + 1.2 * scene.frames[i].rotation.matrix().col(1);
    EXPECT_NEAR(ground.z(), 2.0 * std::sin(k * ground.x()), 1e-9);
    EXPECT_NEAR(std::tan(pitch), 2.0 * k * std::cos(k * ground.x()), 1e-9);
    for (const Vec3 & b : {scene.left_border[i], scene.right_border[i]}) {
      EXPECT_NEAR(b.z(), 2.0 * std::sin(k * b.x()), 1e-9);
    }
  }
  // Maximum slope A k = 0.157 rad.
  EXPECT_NEAR(max_pitch, std::atan(2.0 * k), 1e-3);
  EXPECT_NEAR(min_pitch, -std::atan(2.0 * k), 1e-3);
}

TEST(Synthetic, InvalidParams)
{
  auto code_of = [](const Params & p) {
    try {
      lanekit::synthetic::generate(p);
    } catch (const lanekit::Error & e) {
      return e.code();
    }
    return lanekit::ErrorCode::kIoError;
  };
  Params p = params(PathKind::kArc, 50.0, 1.0);
  p.radius = 4.9;
  EXPECT_EQ(code_of(p), lanekit::ErrorCode::kInvalidParams);
  p = params(PathKind::kStraight, 50.0, 0.19);
  EXPECT_EQ(code_of(p), lanekit::ErrorCode::kInvalidParams);
  p = params(PathKind::kStraight, -1.0, 1.0);
  EXPECT_EQ(code_of(p), lanekit::ErrorCode::kInvalidParams);
  p = params(PathKind::kStraight, 10.0, 1.0);
  p.camera_height = 0.0;
  EXPECT_EQ(code_of(p), lanekit::ErrorCode::kInvalidParams);
  p.camera_height = 1.2;
  p.lane_width = 0.0;
  EXPECT_EQ(code_of(p), lanekit::ErrorCode::kInvalidParams);
}

double forward_error(PathKind kind, double spacing)
{
  Params p = params(kind, 150.0, spacing);
  p.segment_length = 40.0;
  const auto scene = lanekit::synthetic::generate(p);
  return (lanekit::estimate_forward(scene.frames) - scene.truth.forward).norm();
}

double normal_error(PathKind kind, double spacing)
{
  Params p = params(kind, 150.0, spacing);
  p.segment_length = 40.0;
  const auto scene = lanekit::synthetic::generate(p);
  return (lanekit::estimate_normal(scene.frames) - scene.truth.normal).norm();
}

TEST(Synthetic, ForwardConvergesQuadratically)
{
  // Curved paths only: on a circular arc the estimate is already exact.
  for (PathKind kind : {PathKind::kSCurve, PathKind::kHill}) {
    const double coarse = forward_error(kind, 1.0);
    const double fine = forward_error(kind, 0.5);
    EXPECT_GT(coarse, 0.0);
    EXPECT_LE(fine, coarse / 4.0 * 1.1) << lanekit::synthetic::path_kind_name(kind);
  }
  EXPECT_LT(forward_error(PathKind::kArc, 1.0), 1e-12);
}

TEST(Synthetic, NormalIsExactOnFlatCurvedPaths)
{
  // The flat-road normal comes from cross products of coplanar chords, so
  // it carries no discretisation error to shrink.
  for (PathKind kind : {PathKind::kArc, PathKind::kSCurve}) {
    for (double spacing : {1.0, 0.5}) {
      EXPECT_LT(normal_error(kind, spacing), 1e-12);
    }
  }
}

TEST(Synthetic, HillNormalIsNotObservableFromPitchAlone)
{
  // Bending only in pitch makes successive chords span the vertical plane,
  // so their cross product is the across-road axis, not the road normal.
  // Such sequences need a road frame estimated elsewhere.
  const auto scene = lanekit::synthetic::generate(params(PathKind::kHill, 150.0, 0.5));
  const Vec3 n = lanekit::estimate_normal(scene.frames);
  EXPECT_NEAR(std::abs(n.dot(scene.truth.normal)), 0.0, 1e-6);
}

TEST(Synthetic, ReconstructionRoundTripThroughIngest)
{
  Params p = params(PathKind::kSCurve, 80.0, 0.8);
  p.segment_length = 30.0;
  const auto scene = lanekit::synthetic::generate(p);
  const auto camera = lanekit::synthetic::default_camera(640, 480);
  const auto recon = lanekit::synthetic::to_reconstruction(scene, camera);
  const auto parsed =
    lanekit::parse_reconstruction(lanekit::serialize_reconstruction(recon));
  const auto set = lanekit::frames_from_reconstruction(parsed);
  EXPECT_EQ(set.camera, camera);
  ASSERT_EQ(set.frames.size(), scene.frames.size());
  for (std::size_t i = 0; i < scene.frames.size(); ++i) {
    EXPECT_EQ(set.frames[i].name, scene.frames[i].name);
    EXPECT_LT((set.frames[i].center - scene.frames[i].center).norm(), 1e-9);
    EXPECT_LT((set.frames[i].rotation.matrix() - scene.frames[i].rotation.matrix()).norm(), 1e-9);
  }
}

TEST(Synthetic, AnalyticMaskMarksTheEgoLane)
{
  const auto scene = lanekit::synthetic::generate(params(PathKind::kStraight, 150.0, 1.0));
  const auto camera = lanekit::synthetic::default_camera(160, 120);
  const auto mask = lanekit::synthetic::analytic_band_mask(scene, camera, 0.0, 150.0, 1.75, -1.75);
  ASSERT_EQ(mask.size(), 160u * 120u);
  // A point straight ahead on the road, 10 m out, lies inside the lane.
  const lanekit::Pixel px = oracle::pinhole(0.85, 0, 0, 160, 120, Vec3(0, 1.2, 10.0));
  EXPECT_EQ(mask[static_cast<int>(px.v) * 160 + static_cast<int>(px.u)], 1);
  // Top row is sky.
  EXPECT_EQ(mask[80], 0);
}

}  // namespace
