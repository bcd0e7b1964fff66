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

// Analytic driving scenes with exact ground truth, used as test oracles.
//
// World frame: z up, the road surface is z = 0 (or z = elevation(x) for
// hills), paths start at the origin heading along +x.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lanekit/geometry.hpp"
#include "lanekit/ingest.hpp"

namespace lanekit::synthetic {

enum class PathKind { kStraight, kArc, kSCurve, kHill };

PathKind parse_path_kind(const std::string& name);
std::string path_kind_name(PathKind kind);

struct Params {
  PathKind kind = PathKind::kStraight;
  double length = 100.0;   // path length, plan-view length for hills
  double spacing = 1.0;    // distance between frames along the path
  double radius = 20.0;    // arc and s-curve turn radius
  double segment_length = 50.0;  // s-curve: length of each turn
  bool clockwise = false;        // first turn to the right
  double camera_height = 1.2;
  double lane_width = 3.5;
  double hill_amplitude = 2.0;
  double hill_wavelength = 80.0;
  std::string name_prefix = "frame";

  // Throws Error(kInvalidParams) outside the supported ranges
  // (radius >= 5 m, spacing >= 0.2 m, positive length/height/width).
  void validate() const;
};

// Exact state of the path at arc length s.
struct PathPose {
  Vec3 ground;   // point on the road surface
  Vec3 forward;  // unit tangent
  Vec3 down;     // unit surface normal, pointing into the road
  Vec3 left;     // unit across-road direction, left of travel
};

struct Scene {
  Params params;
  std::vector<CameraFrame> frames;
  std::vector<double> path_position;  // s for each frame
  RoadFrame truth;                    // exact, camera coordinates
  std::vector<Vec3> left_border;      // ego-lane borders per frame, world
  std::vector<Vec3> right_border;

  PathPose pose_at(double s) const;
  // Camera pose a generated frame would have at path position s.
  CameraFrame camera_at(double s) const;
};

Scene generate(const Params& params);

CameraModel default_camera(int width = 640, int height = 480);

// Reconstruction document equivalent of the scene (world-to-camera shots).
RawReconstruction to_reconstruction(const Scene& scene,
                                    const CameraModel& camera,
                                    const std::string& camera_name = "dashcam");

// Ray-cast mask of the band [right_offset, left_offset] from path position
// s_view up to s_end, as seen by the camera at s_view. 1 inside, 0 outside.
// Available for flat scenes (straight and arc).
std::vector<std::uint8_t> analytic_band_mask(const Scene& scene,
                                             const CameraModel& camera,
                                             double s_view, double s_end,
                                             double left_offset,
                                             double right_offset,
                                             double z_near = 0.1);

}  // namespace lanekit::synthetic
