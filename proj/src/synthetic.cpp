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

#include <cmath>
#include <cstdio>
#include <numbers>

#include "lanekit/error.hpp"

namespace lanekit::synthetic {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

const Vec3 kWorldDown(0.0, 0.0, -1.0);

// Heading-parameterized planar pose.
PathPose planar_pose(double x, double y, double heading) {
  PathPose p;
  p.ground = Vec3(x, y, 0.0);
  p.forward = Vec3(std::cos(heading), std::sin(heading), 0.0);
  p.down = kWorldDown;
  p.left = Vec3(-p.forward.y(), p.forward.x(), 0.0);
  return p;
}

PathPose arc_pose(double radius, double sign, double s) {
  const double theta = s / radius;
  PathPose p;
  p.ground = Vec3(radius * std::sin(theta),
                  sign * (radius * (1.0 - std::cos(theta))), 0.0);
  p.forward = Vec3(std::cos(theta), sign * std::sin(theta), 0.0);
  p.down = kWorldDown;
  p.left = Vec3(-p.forward.y(), p.forward.x(), 0.0);
  return p;
}

PathPose s_curve_pose(const Params& params, double s) {
  double x = 0.0, y = 0.0, heading = 0.0;
  double sign = params.clockwise ? -1.0 : 1.0;
  const double r = params.radius;
  double remaining = s;
  while (remaining > params.segment_length) {
    const double h1 = heading + sign * params.segment_length / r;
    x += sign * r * (std::sin(h1) - std::sin(heading));
    y -= sign * r * (std::cos(h1) - std::cos(heading));
    heading = h1;
    remaining -= params.segment_length;
    sign = -sign;
  }
  const double h1 = heading + sign * remaining / r;
  return planar_pose(x + sign * r * (std::sin(h1) - std::sin(heading)),
                     y - sign * r * (std::cos(h1) - std::cos(heading)), h1);
}

PathPose hill_pose(const Params& params, double s) {
  const double k = kTwoPi / params.hill_wavelength;
  const double z = params.hill_amplitude * std::sin(k * s);
  const double slope = params.hill_amplitude * k * std::cos(k * s);
  const double norm = std::sqrt(1.0 + slope * slope);
  PathPose p;
  p.ground = Vec3(s, 0.0, z);
  p.forward = Vec3(1.0, 0.0, slope) / norm;
  p.down = Vec3(slope, 0.0, -1.0) / norm;
  p.left = Vec3(0.0, 1.0, 0.0);
  return p;
}

// Inverts the radial distortion by fixed-point iteration.
void undistort(const CameraModel& cam, double xd, double yd, double& xu,
               double& yu) {
  xu = xd;
  yu = yd;
  for (int it = 0; it < 100; ++it) {
    const double d = distortion_factor(cam, xu * xu + yu * yu);
    const double nx = xd / d;
    const double ny = yd / d;
    if (std::abs(nx - xu) < 1e-15 && std::abs(ny - yu) < 1e-15) break;
    xu = nx;
    yu = ny;
  }
}

}  // namespace

PathKind parse_path_kind(const std::string& name) {
  if (name == "straight") return PathKind::kStraight;
  if (name == "arc") return PathKind::kArc;
  if (name == "s_curve" || name == "s-curve") return PathKind::kSCurve;
  if (name == "hill") return PathKind::kHill;
  throw Error(ErrorCode::kInvalidParams, "unknown path kind '" + name + "'");
}

std::string path_kind_name(PathKind kind) {
  switch (kind) {
    case PathKind::kStraight: return "straight";
    case PathKind::kArc: return "arc";
    case PathKind::kSCurve: return "s_curve";
    case PathKind::kHill: return "hill";
  }
  return "straight";
}

void Params::validate() const {
  auto fail = [](const char* what) {
    throw Error(ErrorCode::kInvalidParams, what);
  };
  if (!(length > 0.0)) fail("length must be positive");
  if (!(spacing >= 0.2)) fail("spacing must be >= 0.2 m");
  if ((kind == PathKind::kArc || kind == PathKind::kSCurve) && !(radius >= 5.0)) {
    fail("radius must be >= 5 m");
  }
  if (kind == PathKind::kSCurve && !(segment_length > 0.0)) {
    fail("segment length must be positive");
  }
  if (kind == PathKind::kHill && !(hill_wavelength > 0.0)) {
    fail("hill wavelength must be positive");
  }
  if (!(camera_height > 0.0)) fail("camera height must be positive");
  if (!(lane_width > 0.0)) fail("lane width must be positive");
}

PathPose Scene::pose_at(double s) const {
  switch (params.kind) {
    case PathKind::kStraight: return planar_pose(s, 0.0, 0.0);
    case PathKind::kArc:
      return arc_pose(params.radius, params.clockwise ? -1.0 : 1.0, s);
    case PathKind::kSCurve: return s_curve_pose(params, s);
    case PathKind::kHill: return hill_pose(params, s);
  }
  return planar_pose(s, 0.0, 0.0);
}

CameraFrame Scene::camera_at(double s) const {
  const PathPose p = pose_at(s);
  CameraFrame f;
  f.center = p.ground - params.camera_height * p.down;
  f.rotation = Rotation::from_axes(p.down.cross(p.forward), p.down, p.forward);
  return f;
}

Scene generate(const Params& params) {
  params.validate();
  Scene scene;
  scene.params = params;
  scene.truth.height = params.camera_height;
  const int count =
      static_cast<int>(std::floor(params.length / params.spacing + 1e-9)) + 1;
  const double half = params.lane_width / 2.0;
  for (int k = 0; k < count; ++k) {
    const double s = k * params.spacing;
    CameraFrame f = scene.camera_at(s);
    char name[64];
    std::snprintf(name, sizeof(name), "%s_%05d", params.name_prefix.c_str(), k);
    f.index = k;
    f.name = name;
    f.image_ref = name;
    const PathPose p = scene.pose_at(s);
    scene.left_border.push_back(p.ground + half * p.left);
    scene.right_border.push_back(p.ground - half * p.left);
    scene.path_position.push_back(s);
    scene.frames.push_back(std::move(f));
  }
  return scene;
}

CameraModel default_camera(int width, int height) {
  CameraModel c;
  c.normalized_focal = 0.85;
  c.width = width;
  c.height = height;
  return c;
}

RawReconstruction to_reconstruction(const Scene& scene,
                                    const CameraModel& camera,
                                    const std::string& camera_name) {
  RawReconstruction recon;
  recon.cameras.emplace(camera_name, camera);
  for (std::size_t k = 0; k < scene.frames.size(); ++k) {
    const CameraFrame& f = scene.frames[k];
    const Rotation world_to_cam = f.rotation.inverse();
    RawShot shot;
    shot.name = f.name;
    shot.camera = camera_name;
    shot.rotation_aa = world_to_cam.to_axis_angle();
    shot.translation = -(world_to_cam * f.center);
    shot.capture_order = static_cast<long>(k);
    recon.shots.push_back(std::move(shot));
  }
  return recon;
}

std::vector<std::uint8_t> analytic_band_mask(const Scene& scene,
                                             const CameraModel& camera,
                                             double s_view, double s_end,
                                             double left_offset,
                                             double right_offset,
                                             double z_near) {
  const Params& p = scene.params;
  if (p.kind != PathKind::kStraight && p.kind != PathKind::kArc) {
    throw Error(ErrorCode::kInvalidParams,
                "analytic masks exist for straight and arc scenes only");
  }
  if (p.kind == PathKind::kArc && s_end - s_view >= kTwoPi * p.radius) {
    throw Error(ErrorCode::kInvalidParams, "band wraps a full circle");
  }
  camera.validate();
  const CameraFrame view = scene.camera_at(s_view);
  const double sign = p.clockwise ? -1.0 : 1.0;
  const double scale = camera.normalized_focal * camera.max_dimension();
  const double theta_view = s_view / p.radius;
  const double sweep = (s_end - s_view) / p.radius;

  std::vector<std::uint8_t> mask(
      static_cast<std::size_t>(camera.width) * camera.height, 0);
  for (int y = 0; y < camera.height; ++y) {
    for (int x = 0; x < camera.width; ++x) {
      const double xd = (x + 0.5 - camera.width / 2.0) / scale;
      const double yd = (y + 0.5 - camera.height / 2.0) / scale;
      double xu, yu;
      undistort(camera, xd, yd, xu, yu);
      const Vec3 ray = view.rotation * Vec3(xu, yu, 1.0);
      if (!(ray.z() < 0.0)) continue;
      const double t = -view.center.z() / ray.z();
      if (t < z_near) continue;
      const Vec3 hit = view.center + t * ray;
      bool inside = false;
      if (p.kind == PathKind::kStraight) {
        inside = hit.x() >= s_view && hit.x() <= s_end &&
                 hit.y() >= right_offset && hit.y() <= left_offset;
      } else {
        const double qx = hit.x();
        const double qy = hit.y() - sign * p.radius;
        const double lateral = sign * (p.radius - std::hypot(qx, qy));
        // Ground at angle theta sits at (R sin(theta), -sign R cos(theta))
        // relative to the turn center.
        double delta = std::atan2(qx, -sign * qy) - theta_view;
        delta = std::fmod(delta, kTwoPi);
        if (delta < 0) delta += kTwoPi;
        inside = lateral >= right_offset && lateral <= left_offset &&
                 delta <= sweep;
      }
      if (inside) mask[static_cast<std::size_t>(y) * camera.width + x] = 1;
    }
  }
  return mask;
}

}  // namespace lanekit::synthetic
