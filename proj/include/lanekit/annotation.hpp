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

// Editable lane annotation state for one sequence.
//
// Bands tile the road strip side by side: side_order 0 is the ego lane,
// negative orders lie to its left and positive ones to its right. Adjacent
// bands share an edge (left band's right_w == right band's left_w at every
// frame), and edits move shared edges jointly.
//
// All scalar state (height, offsets) is kept on a 1e-6 m grid so that the
// project file, which stores six decimals, reproduces it bit-exactly.

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "lanekit/geometry.hpp"
#include "lanekit/ingest.hpp"

namespace lanekit {

enum class BandKind { kEgoLane, kLane, kNonRoadBand };
enum class Side { kLeft, kRight };
enum class SceneType { kUnset, kUrban, kHighway, kRural };
enum class ProjectStatus { kActive, kRejected };

std::string_view to_string(BandKind kind);
std::string_view to_string(Side side);
std::string_view to_string(SceneType type);
std::string_view to_string(ProjectStatus status);
BandKind parse_band_kind(std::string_view s);
Side parse_side(std::string_view s);
SceneType parse_scene_type(std::string_view s);

// Rounds to the 1e-6 m storage grid.
double quantize(double meters);

struct LaneBand {
  int band_id = 0;
  BandKind kind = BandKind::kLane;
  int side_order = 0;
  std::vector<double> left_w;
  std::vector<double> right_w;

  BandOffsets offsets() const { return {left_w, right_w}; }
  bool operator==(const LaneBand&) const = default;
};

namespace edit {

struct AdjustHeight {
  double delta = 0.0;
  bool operator==(const AdjustHeight&) const = default;
};
struct AdjustWidth {
  int band_id = 0;
  Side side = Side::kLeft;
  double delta = 0.0;
  std::optional<int> from_frame;  // whole sequence when empty
  bool operator==(const AdjustWidth&) const = default;
};
struct AddBand {
  Side side = Side::kLeft;
  BandKind kind = BandKind::kLane;
  double width = 3.5;
  bool operator==(const AddBand&) const = default;
};
struct SetCrop {
  int rows = 0;
  bool operator==(const SetCrop&) const = default;
};
struct SetHorizon {
  int rows = 0;
  bool operator==(const SetHorizon&) const = default;
};
struct Reject {
  bool operator==(const Reject&) const = default;
};
struct SetSceneType {
  SceneType type = SceneType::kUnset;
  bool operator==(const SetSceneType&) const = default;
};

}  // namespace edit

using EditPayload =
    std::variant<edit::AdjustHeight, edit::AdjustWidth, edit::AddBand,
                 edit::SetCrop, edit::SetHorizon, edit::Reject,
                 edit::SetSceneType>;

struct EditCommand {
  EditPayload payload;
  std::int64_t timestamp_ms = 0;

  bool operator==(const EditCommand&) const = default;
};

std::string edit_kind(const EditCommand& cmd);
std::string edit_to_json(const EditCommand& cmd);
// Throws kParseError on malformed commands.
EditCommand edit_from_json(std::string_view text);

std::int64_t now_ms();

// Everything needed to rebuild the initial project for replay.
struct ProjectOrigin {
  std::string sequence_ref;
  RoadFrame road;
  double default_width = 3.5;
  int frame_count = 0;
  int image_height = 0;

  bool operator==(const ProjectOrigin&) const = default;
};

class AnnotationProject {
 public:
  // One centered ego band of default_width; empty edit log.
  static AnnotationProject create(const ProjectOrigin& origin);

  // Rebuilds a project by applying the log to the initial state.
  static AnnotationProject replay(const ProjectOrigin& origin,
                                  std::span<const EditCommand> log);

  // Undo: the state after the first `count` commands.
  AnnotationProject replay_prefix(std::size_t count) const;

  // Applies one command atomically and appends it to the log. Returns the new
  // band id for AddBand and 0 otherwise. On error the project is unchanged.
  int apply(const EditCommand& cmd);

  void adjust_height(double delta);
  void adjust_width(int band_id, Side side, double delta,
                    std::optional<int> from_frame = std::nullopt);
  int add_band(Side side, BandKind kind, double width);
  void set_crop(int rows);
  void set_horizon(int rows);
  void reject();
  void set_scene_type(SceneType type);

  const ProjectOrigin& origin() const { return origin_; }
  const RoadFrame& road() const { return road_; }
  const std::vector<LaneBand>& bands() const { return bands_; }
  const LaneBand* find_band(int band_id) const;
  const LaneBand& ego() const;
  int crop_top_rows() const { return crop_top_rows_; }
  int horizon_rows() const { return horizon_rows_; }
  SceneType scene_type() const { return scene_type_; }
  ProjectStatus status() const { return status_; }
  bool active() const { return status_ == ProjectStatus::kActive; }
  const std::vector<EditCommand>& edit_log() const { return edit_log_; }
  int frame_count() const { return origin_.frame_count; }

  // Throws kInvertedBand / kOutOfRange if the tiling invariant is broken.
  void check_invariants() const;

  bool operator==(const AnnotationProject&) const = default;

 private:
  friend AnnotationProject load_project(std::string_view text);

  int apply_payload(const EditPayload& payload);
  void require_active() const;
  LaneBand* band_by_order(int side_order);
  int next_band_id() const;

  ProjectOrigin origin_;
  RoadFrame road_;
  std::vector<LaneBand> bands_;  // sorted by side_order
  int crop_top_rows_ = 0;
  int horizon_rows_ = 0;
  SceneType scene_type_ = SceneType::kUnset;
  ProjectStatus status_ = ProjectStatus::kActive;
  std::vector<EditCommand> edit_log_;
};

AnnotationProject init_project(const Sequence& sequence, const RoadFrame& road,
                               double default_width,
                               std::string sequence_ref = {});

// Re-estimation on top of an existing project; refuses rejected ones.
AnnotationProject reinit_project(const AnnotationProject& previous,
                                 const RoadFrame& road, double default_width);

inline constexpr int kProjectFormatVersion = 1;

std::string save_project(const AnnotationProject& project);
// Throws kParseError or kVersionMismatch.
AnnotationProject load_project(std::string_view text);

// Standalone RoadFrame document {h, n, f, r}, for reuse across sequences.
std::string save_road_frame(const RoadFrame& road);
RoadFrame load_road_frame(std::string_view text);

}  // namespace lanekit
