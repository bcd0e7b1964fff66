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

#include "lanekit/annotation.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <string>
#include <vector>

#include "lanekit/error.hpp"
#include "lanekit/render.hpp"
#include "lanekit/synthetic.hpp"

namespace
{
using lanekit::AnnotationProject;
using lanekit::BandKind;
using lanekit::EditCommand;
using lanekit::Error;
using lanekit::ErrorCode;
using lanekit::LaneBand;
using lanekit::SceneType;
using lanekit::Sequence;
using lanekit::Side;
namespace edit = lanekit::edit;

template <class Fn>
ErrorCode code_of(Fn fn)
{
  try {
    fn();
  } catch (const Error & e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kIoError;
}

struct Fixture
{
  lanekit::synthetic::Scene scene;
  Sequence sequence;

  explicit Fixture(double length = 59.0)
  {
    lanekit::synthetic::Params p;
    p.kind = lanekit::synthetic::PathKind::kStraight;
    p.length = length;
    scene = lanekit::synthetic::generate(p);
    sequence = lanekit::make_sequence(
      "s", lanekit::synthetic::default_camera(160, 120), scene.frames, 20.0);
  }
  AnnotationProject project(double width = 3.5) const
  {
    return lanekit::init_project(sequence, scene.truth, width, "s.sequence.json");
  }
};

const LaneBand & band(const AnnotationProject & p, int id)
{
  const LaneBand * b = p.find_band(id);
  EXPECT_NE(b, nullptr);
  return *b;
}

TEST(InitProject, DefaultWidthGivesHalfWidthOffsets)
{
  const Fixture fx;
  const AnnotationProject p = fx.project(3.5);
  ASSERT_EQ(p.bands().size(), 1u);
  const LaneBand & ego = p.ego();
  EXPECT_EQ(ego.kind, BandKind::kEgoLane);
  EXPECT_EQ(ego.side_order, 0);
  ASSERT_EQ(ego.left_w.size(), 60u);
  ASSERT_EQ(ego.right_w.size(), 60u);
  for (int i = 0; i < 60; ++i) {
    EXPECT_EQ(ego.left_w[i], 1.75);
    EXPECT_EQ(ego.right_w[i], -1.75);
  }
  EXPECT_TRUE(p.edit_log().empty());
  EXPECT_TRUE(p.active());
}

TEST(InitProject, RejectedInputIsRefused)
{
  const Fixture fx;
  AnnotationProject p = fx.project();
  p.reject();
  EXPECT_EQ(
    code_of([&] { lanekit::reinit_project(p, fx.scene.truth, 3.5); }),
    ErrorCode::kRejectedSequence);
}

TEST(AdjustHeight, Examples)
{
  const Fixture fx;
  AnnotationProject p = fx.project();
  p.adjust_height(0.1);
  EXPECT_DOUBLE_EQ(p.road().height, 1.3);
  AnnotationProject q = fx.project();
  const AnnotationProject before = q;
  EXPECT_EQ(code_of([&] { q.adjust_height(-1.2); }), ErrorCode::kInvalidHeight);
  EXPECT_EQ(q, before);
}

TEST(AdjustHeight, UpThenDownRestoresMasksBitForBit)
{
  const Fixture fx;
  AnnotationProject p = fx.project();
  const auto before = lanekit::render_frame(p, fx.sequence, 3);
  const double h0 = p.road().height;
  p.adjust_height(0.1);
  EXPECT_NE(lanekit::render_frame(p, fx.sequence, 3), before);
  p.adjust_height(-0.1);
  EXPECT_EQ(p.road().height, h0);
  EXPECT_EQ(lanekit::render_frame(p, fx.sequence, 3), before);
}

TEST(AdjustWidth, WholeSequenceShift)
{
  const Fixture fx;
  AnnotationProject p = fx.project();
  p.adjust_width(p.ego().band_id, Side::kRight, -0.25);
  for (double r : p.ego().right_w) EXPECT_EQ(r, -2.0);
  for (double l : p.ego().left_w) EXPECT_EQ(l, 1.75);
}

TEST(AdjustWidth, FromFrameLeavesPrefixUntouched)
{
  const Fixture fx;
  AnnotationProject p = fx.project();
  p.adjust_width(p.ego().band_id, Side::kLeft, 0.3, 30);
  for (int i = 0; i < 60; ++i) {
    EXPECT_EQ(p.ego().left_w[i], i < 30 ? 1.75 : 2.05);
  }
  EXPECT_EQ(
    code_of([&] { p.adjust_width(p.ego().band_id, Side::kLeft, 0.1, 60); }),
    ErrorCode::kOutOfRange);
  EXPECT_EQ(code_of([&] { p.adjust_width(99, Side::kLeft, 0.1); }), ErrorCode::kUnknownBand);
}

TEST(AdjustWidth, CollapsingOneFrameIsRejectedAtomically)
{
  const Fixture fx;
  AnnotationProject p = fx.project();
  const int ego = p.ego().band_id;
  p.adjust_width(ego, Side::kRight, 1.0, 7);
  p.adjust_width(ego, Side::kRight, -1.0, 8);
  ASSERT_EQ(p.ego().right_w[7], -0.75);
  ASSERT_EQ(p.ego().right_w[8], -1.75);
  const AnnotationProject before = p;
  // left_w becomes -0.75 everywhere, equal to right_w at frame 7 only.
  EXPECT_EQ(code_of([&] { p.adjust_width(ego, Side::kLeft, -2.5); }), ErrorCode::kInvertedBand);
  EXPECT_EQ(p, before);
  EXPECT_EQ(p.edit_log().size(), 2u);
  // A smaller step that keeps frame 7 open is fine.
  p.adjust_width(ego, Side::kLeft, -2.4);
  EXPECT_GT(p.ego().left_w[7], p.ego().right_w[7]);
}

TEST(AdjustWidth, SharedEdgeMovesWithNeighbour)
{
  const Fixture fx;
  AnnotationProject p = fx.project();
  const int lane = p.add_band(Side::kLeft, BandKind::kLane, 3.5);
  p.adjust_width(p.ego().band_id, Side::kLeft, 0.5);
  EXPECT_EQ(band(p, lane).right_w[0], 2.25);
  EXPECT_EQ(band(p, lane).left_w[0], 5.25);
  EXPECT_EQ(p.ego().left_w[0], 2.25);
  // Moving the shared edge past the neighbour's far edge would invert it.
  EXPECT_EQ(
    code_of([&] { p.adjust_width(p.ego().band_id, Side::kLeft, 3.0); }),
    ErrorCode::kInvertedBand);
  p.check_invariants();
}

TEST(AddBand, Examples)
{
  const Fixture fx;
  AnnotationProject p = fx.project();
  const int a = p.add_band(Side::kLeft, BandKind::kLane, 3.5);
  for (int i = 0; i < 60; ++i) {
    EXPECT_EQ(band(p, a).right_w[i], 1.75);
    EXPECT_EQ(band(p, a).left_w[i], 5.25);
  }
  const int b = p.add_band(Side::kLeft, BandKind::kLane, 3.0);
  EXPECT_EQ(band(p, a).side_order, -1);
  EXPECT_EQ(band(p, b).side_order, -2);
  EXPECT_EQ(band(p, b).right_w[0], 5.25);
  const int c = p.add_band(Side::kRight, BandKind::kLane, 3.5);
  const int d = p.add_band(Side::kRight, BandKind::kNonRoadBand, 2.0);
  EXPECT_EQ(band(p, c).side_order, 1);
  EXPECT_EQ(band(p, d).side_order, 2);
  EXPECT_EQ(band(p, d).left_w[0], -5.25);
  EXPECT_EQ(band(p, d).right_w[0], -7.25);
  std::vector<int> ids = {p.ego().band_id, a, b, c, d};
  std::sort(ids.begin(), ids.end());
  EXPECT_EQ(std::unique(ids.begin(), ids.end()), ids.end());
  // Nothing goes beyond a non-road band.
  EXPECT_EQ(
    code_of([&] { p.add_band(Side::kRight, BandKind::kLane, 3.5); }), ErrorCode::kInvalidParams);
  p.check_invariants();
}

TEST(AddBand, NonRoadBandRendersAsNonRoad)
{
  const Fixture fx;
  AnnotationProject p = fx.project();
  const int nr = p.add_band(Side::kRight, BandKind::kNonRoadBand, 3.0);
  const auto mask = lanekit::render_frame(p, fx.sequence, 0);
  std::size_t non_road = 0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask.class_plane[i] == lanekit::kNonRoad) {
      ++non_road;
      EXPECT_EQ(mask.instance_plane[i], 0);
    }
    EXPECT_NE(mask.instance_plane[i], nr);
  }
  EXPECT_GT(non_road, 0u);
}

TEST(CropAndHorizon, RangeChecked)
{
  const Fixture fx;
  AnnotationProject p = fx.project();
  p.set_crop(120);
  p.set_horizon(0);
  EXPECT_EQ(p.crop_top_rows(), 120);
  EXPECT_EQ(code_of([&] { p.set_crop(121); }), ErrorCode::kOutOfRange);
  EXPECT_EQ(code_of([&] { p.set_horizon(-1); }), ErrorCode::kOutOfRange);
}

TEST(Reject, GuardsFurtherEdits)
{
  const Fixture fx;
  AnnotationProject p = fx.project();
  p.reject();
  EXPECT_FALSE(p.active());
  EXPECT_EQ(
    code_of([&] { p.adjust_width(p.ego().band_id, Side::kLeft, 0.1); }),
    ErrorCode::kRejectedSequence);
  EXPECT_EQ(code_of([&] { p.adjust_height(0.1); }), ErrorCode::kRejectedSequence);
  p.set_scene_type(SceneType::kUrban);
  EXPECT_EQ(p.scene_type(), SceneType::kUrban);
}

TEST(EditCommand, JsonRoundTrip)
{
  const std::vector<EditCommand> cmds = {
    {edit::AdjustHeight{0.05}, 1},
    {edit::AdjustWidth{1, Side::kRight, -0.05, 12}, 2},
    {edit::AdjustWidth{2, Side::kLeft, 0.25, std::nullopt}, 3},
    {edit::AddBand{Side::kLeft, BandKind::kNonRoadBand, 2.5}, 4},
    {edit::SetCrop{40}, 5},
    {edit::SetHorizon{100}, 6},
    {edit::Reject{}, 7},
    {edit::SetSceneType{SceneType::kHighway}, 8},
  };
  for (const auto & c : cmds) {
    EXPECT_EQ(lanekit::edit_from_json(lanekit::edit_to_json(c)), c) << lanekit::edit_to_json(c);
  }
  EXPECT_EQ(
    code_of([] { lanekit::edit_from_json(R"({"kind": "teleport"})"); }), ErrorCode::kParseError);
}

// Applies n random edits, some of which fail; returns the project.
AnnotationProject random_session(const Fixture & fx, int n, unsigned seed)
{
  AnnotationProject p = fx.project();
  std::mt19937 rng(seed);
  std::uniform_int_distribution<int> kind(0, 9);
  std::uniform_int_distribution<int> step(-6, 6);
  std::uniform_int_distribution<int> frame(0, 59);
  std::uniform_int_distribution<int> rows(0, 120);
  for (int i = 0; i < n; ++i) {
    const auto & bands = p.bands();
    const int id = bands[std::uniform_int_distribution<int>(0, bands.size() - 1)(rng)].band_id;
    EditCommand cmd;
    cmd.timestamp_ms = 1000 + i;
    switch (kind(rng)) {
      case 0: cmd.payload = edit::AdjustHeight{0.05 * step(rng)}; break;
      case 1: cmd.payload = edit::AddBand{rng() % 2 ? Side::kLeft : Side::kRight,
                                          rng() % 4 ? BandKind::kLane : BandKind::kNonRoadBand,
                                          3.0 + 0.05 * step(rng)};
        break;
      case 2: cmd.payload = edit::SetCrop{rows(rng)}; break;
      case 3: cmd.payload = edit::SetHorizon{rows(rng)}; break;
      case 4: cmd.payload = edit::SetSceneType{static_cast<SceneType>(rng() % 4)}; break;
      default:
        cmd.payload = edit::AdjustWidth{
          id, rng() % 2 ? Side::kLeft : Side::kRight, 0.05 * step(rng),
          rng() % 2 ? std::optional<int>(frame(rng)) : std::nullopt};
    }
    try {
      p.apply(cmd);
    } catch (const Error &) {
    }
  }
  return p;
}

TEST(SaveLoad, FreshRoundTrip)
{
  const Fixture fx;
  const AnnotationProject p = fx.project();
  EXPECT_EQ(lanekit::load_project(lanekit::save_project(p)), p);
}

TEST(SaveLoad, FiftyEditsRoundTripAndReplay)
{
  const Fixture fx;
  const AnnotationProject p = random_session(fx, 50, 3);
  const AnnotationProject loaded = lanekit::load_project(lanekit::save_project(p));
  EXPECT_EQ(loaded, p);
  EXPECT_EQ(AnnotationProject::replay(loaded.origin(), loaded.edit_log()), p);
  EXPECT_EQ(lanekit::save_project(loaded), lanekit::save_project(p));
}

TEST(SaveLoad, Errors)
{
  const Fixture fx;
  const std::string text = lanekit::save_project(random_session(fx, 10, 4));
  EXPECT_EQ(
    code_of([&] { lanekit::load_project(text.substr(0, text.size() / 2)); }),
    ErrorCode::kParseError);
  std::string future = text;
  const auto pos = future.find("\"version\": 1");
  ASSERT_NE(pos, std::string::npos);
  future.replace(pos, 12, "\"version\": 2");
  EXPECT_EQ(code_of([&] { lanekit::load_project(future); }), ErrorCode::kVersionMismatch);
}

TEST(Invariants, TilingAndStableIdsUnderRandomEdits)
{
  const Fixture fx;
  std::size_t most_bands = 0;
  for (unsigned seed = 0; seed < 10; ++seed) {
    const AnnotationProject p = random_session(fx, 200, seed);
    p.check_invariants();
    most_bands = std::max(most_bands, p.bands().size());
    auto bands = p.bands();
    std::sort(bands.begin(), bands.end(), [](const LaneBand & a, const LaneBand & b) {
      return a.side_order < b.side_order;
    });
    for (int i = 0; i < 60; ++i) {
      for (std::size_t k = 0; k < bands.size(); ++k) {
        EXPECT_GT(bands[k].left_w[i], bands[k].right_w[i]);
        if (k + 1 < bands.size()) {
          EXPECT_EQ(bands[k].right_w[i], bands[k + 1].left_w[i]);
        }
      }
    }
    EXPECT_EQ(std::count_if(bands.begin(), bands.end(), [](const LaneBand & b) {
      return b.kind == BandKind::kEgoLane;
    }), 1);
  }
  EXPECT_GE(most_bands, 3u);
}

TEST(Replay, PrefixIsUndo)
{
  const Fixture fx;
  AnnotationProject p = fx.project();
  p.adjust_height(0.1);
  const AnnotationProject after_one = p;
  p.add_band(Side::kLeft, BandKind::kLane, 3.5);
  p.set_crop(10);
  EXPECT_EQ(p.replay_prefix(1), after_one);
  EXPECT_EQ(p.replay_prefix(0), fx.project());
  EXPECT_EQ(p.replay_prefix(3), p);
}

TEST(Quantize, SixDecimalGrid)
{
  EXPECT_EQ(lanekit::quantize(1.2345674), 1.234567);
  EXPECT_EQ(lanekit::quantize(-1.75), -1.75);
  EXPECT_EQ(lanekit::quantize(lanekit::quantize(0.1 + 0.2)), lanekit::quantize(0.3));
}

}  // namespace
