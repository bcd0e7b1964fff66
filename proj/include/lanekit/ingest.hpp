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

// Reading structure-from-motion output and cutting it into sequences.

#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lanekit/geometry.hpp"

namespace lanekit {

// One shot as stored in the reconstruction document. rotation_aa and
// translation follow the world-to-camera convention x_cam = R x + t.
struct RawShot {
  std::string name;
  std::string camera;
  Vec3 rotation_aa = Vec3::Zero();
  Vec3 translation = Vec3::Zero();
  std::optional<Vec3> gps_position;
  long capture_order = 0;

  // Derived: camera center -R^T t and camera-to-world rotation R^T.
  Vec3 center() const;
  Rotation camera_to_world() const;
};

struct RawReconstruction {
  std::map<std::string, CameraModel> cameras;
  std::vector<RawShot> shots;  // sorted by capture_order, then name
};

// Throws kParseError (with a field path) or kUnknownCameraModel.
RawReconstruction parse_reconstruction(std::string_view text);
std::string serialize_reconstruction(const RawReconstruction& recon);

// "frame_name,lat_deg,lon_deg" per line; a header line is tolerated.
std::map<std::string, Geotag> parse_gps_csv(std::string_view text);

struct FrameSet {
  std::string camera_name;
  CameraModel camera;
  std::vector<CameraFrame> frames;
};

// Converts shots to frames in capture order. All shots must share a single
// camera model. GPS sidecar entries, when given, become frame geotags.
FrameSet frames_from_reconstruction(
    const RawReconstruction& recon,
    const std::map<std::string, Geotag>& gps = {});

// Haversine distance on a sphere of radius 6,371,000 m.
double geo_distance(const Geotag& a, const Geotag& b);

// Geotags when both frames have them, then topocentric GPS positions, then
// SfM camera centers.
double frame_distance(const CameraFrame& a, const CameraFrame& b);

// Greedy scan keeping a frame iff it is at least min_dist from the last kept
// frame. The first frame is always kept.
std::vector<CameraFrame> filter_by_distance(std::span<const CameraFrame> frames,
                                            double min_dist = 1.0);

struct Sequence {
  std::string name;
  CameraModel camera;
  std::vector<CameraFrame> frames;
  std::vector<double> cumulative_length;  // along the camera-center polyline
  int annotatable_end_index = -1;

  double length() const {
    return cumulative_length.empty() ? 0.0 : cumulative_length.back();
  }
  int frame_count() const { return static_cast<int>(frames.size()); }
};

std::vector<double> cumulative_arc_length(std::span<const CameraFrame> frames);

// Last index whose remaining length to the end is >= tail; -1 if none.
int annotatable_end_index(std::span<const double> cumulative, double tail = 100.0);

// Greedy split of the center polyline into pieces no longer than max_len.
// Every input frame lands in exactly one piece.
std::vector<std::vector<CameraFrame>> split_by_length(
    std::span<const CameraFrame> frames, double max_len = 200.0);

struct SplitOptions {
  double max_length = 200.0;
  double tail_length = 100.0;
  std::string name_prefix = "seq";
};

struct SplitWarning {
  int piece = 0;
  double length = 0.0;
  std::string message;
};

struct SplitResult {
  std::vector<Sequence> sequences;
  // Pieces shorter than the tail length (no annotatable range), dropped.
  std::vector<SplitWarning> dropped;
};

SplitResult split_sequences(std::span<const CameraFrame> frames,
                            const CameraModel& camera,
                            const SplitOptions& options = {});

Sequence make_sequence(std::string name, const CameraModel& camera,
                       std::vector<CameraFrame> frames,
                       double tail_length = 100.0);

std::string save_sequence(const Sequence& sequence);
Sequence load_sequence(std::string_view text);

}  // namespace lanekit
