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

// Projective and road-plane geometry for trajectory-driven lane annotation.
//
// Conventions used throughout:
//  * Camera axes are x-right, y-down, z-forward.
//  * A Rotation maps camera coordinates to world coordinates, so a world
//    point p has camera coordinates R^T (p - c).
//  * Lateral offsets are measured along the across-road vector r, which
//    points to the left of the direction of travel; larger offsets are
//    further left.

#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace lanekit {

using Vec3 = Eigen::Vector3d;

// Proper rotation (orthonormal, det = +1) from camera to world coordinates.
class Rotation {
 public:
  static constexpr double kTolerance = 1e-9;

  Rotation() : matrix_(Eigen::Matrix3d::Identity()) {}
  // Throws Error(kInvalidRotation) if the matrix is not a proper rotation
  // within kTolerance.
  explicit Rotation(const Eigen::Matrix3d& matrix);

  static Rotation from_axis_angle(const Vec3& axis_angle);
  // Columns are the camera x, y and z axes expressed in world coordinates.
  static Rotation from_axes(const Vec3& right, const Vec3& down,
                            const Vec3& forward);

  Vec3 to_axis_angle() const;

  const Eigen::Matrix3d& matrix() const { return matrix_; }
  Rotation inverse() const { return Rotation(matrix_.transpose(), Trusted{}); }

  Vec3 operator*(const Vec3& v) const { return matrix_ * v; }
  Rotation operator*(const Rotation& other) const {
    return Rotation(matrix_ * other.matrix_, Trusted{});
  }
  // R^{-1} v without forming the inverse.
  Vec3 inverse_apply(const Vec3& v) const { return matrix_.transpose() * v; }

  bool operator==(const Rotation& other) const {
    return matrix_ == other.matrix_;
  }

 private:
  struct Trusted {};
  Rotation(const Eigen::Matrix3d& matrix, Trusted) : matrix_(matrix) {}

  Eigen::Matrix3d matrix_;
};

struct Geotag {
  double latitude_deg = 0.0;
  double longitude_deg = 0.0;

  bool operator==(const Geotag&) const = default;
};

struct CameraFrame {
  int index = 0;
  std::string name;
  Vec3 center = Vec3::Zero();
  Rotation rotation;
  // Opaque handle resolved by whoever serves images (usually a file stem).
  std::string image_ref;
  std::optional<Geotag> geotag;
  // Topocentric GPS position in meters, when the reconstruction carries one.
  std::optional<Vec3> gps_position;

  bool operator==(const CameraFrame&) const = default;
};

struct CameraModel {
  double normalized_focal = 0.85;
  double k1 = 0.0;
  double k2 = 0.0;
  int width = 0;
  int height = 0;

  // Throws Error(kInvalidCamera) when focal or image size is non-positive.
  void validate() const;
  int max_dimension() const { return width > height ? width : height; }

  bool operator==(const CameraModel&) const = default;
};

// Sequence-level road quantities, all directions in camera coordinates.
struct RoadFrame {
  double height = 1.2;
  Vec3 normal = Vec3::UnitY();
  Vec3 forward = Vec3::UnitZ();
  Vec3 across = -Vec3::UnitX();

  // Builds a frame from a height, normal and forward direction; the across
  // vector is recomputed as forward x normal.
  static RoadFrame make(double height, const Vec3& normal, const Vec3& forward);
  void validate() const;

  bool operator==(const RoadFrame&) const = default;
};

struct EstimationParams {
  double eps_motion = 1e-3;  // meters
  double eps_turn = 1e-6;
  double z_near = 0.1;       // meters
  Vec3 down_axis = Vec3::UnitY();
};

// Per-frame intermediate quantities of the normal/forward estimators.
struct MotionDerivatives {
  int frame = 0;
  Vec3 m_prev;   // m_{i-1,i}
  Vec3 m_next;   // m_{i,i+1}
  Vec3 m_span;   // m_{i-1,i+1}
  Vec3 normal;   // sign-canonicalized, unnormalized n_i
  Vec3 forward;  // f_i
  double weight = 0.0;  // a_i
};

struct Pixel {
  double u = 0.0;
  double v = 0.0;

  bool operator==(const Pixel&) const = default;
};

using Polygon2 = std::vector<Pixel>;
using Polygon3 = std::vector<Vec3>;

struct BorderPoints {
  Vec3 left;
  Vec3 right;
};

// One projected road segment between border points j and j+1.
struct ImageQuad {
  int segment = 0;
  Polygon2 vertices;
};

// Throws Error(kDegenerateMotion) when the points are closer than eps.
Vec3 motion_vector(const Vec3& from, const Vec3& to, double eps = 1e-3);

// Flips v so that v . down_axis >= 0.
Vec3 canonicalize_normal(const Vec3& v, const Vec3& down_axis);

// Derivatives for every interior frame that has non-degenerate motion on
// both sides; frames near standstill are skipped.
std::vector<MotionDerivatives> motion_derivatives(
    std::span<const CameraFrame> frames, const EstimationParams& params = {});

// Aggregated road normal; throws kInsufficientTurning on straight paths.
Vec3 estimate_normal(std::span<const CameraFrame> frames,
                     const EstimationParams& params = {});

// Aggregated forward direction; throws kNoForwardMotion when every
// consecutive pair reverses.
Vec3 estimate_forward(std::span<const CameraFrame> frames,
                      const EstimationParams& params = {});

// forward x normal, normalized. Throws kDegenerateFrame when the inputs are
// close to parallel (|f . n| >= 0.99).
Vec3 across_vector(const Vec3& forward, const Vec3& normal);

Vec3 ground_point(const CameraFrame& frame, const RoadFrame& road);

// Throws kInvertedBand unless left_offset > right_offset.
BorderPoints border_points(const CameraFrame& frame, const RoadFrame& road,
                           double left_offset, double right_offset);

Vec3 to_camera(const CameraFrame& frame, const Vec3& world_point);

// Distortion factor 1 + k1 rho^2 + k2 rho^4.
double distortion_factor(const CameraModel& model, double rho2);

// Largest squared normalized radius for which the distorted radius
// rho * d(rho) is still increasing; +inf when it always is.
double distortion_validity_radius2(const CameraModel& model);

// Projects a camera-space point. Throws kBehindCamera when z <= z_near.
Pixel project_camera_point(const CameraModel& model, const Vec3& camera_point,
                           double z_near = 0.1);

// Projects a world point into the given frame.
Pixel project(const CameraModel& model, const CameraFrame& frame,
              const Vec3& world_point, double z_near = 0.1);

// Keeps the part of a camera-space polygon with z >= z_near.
Polygon3 clip_near_plane(std::span<const Vec3> polygon, double z_near);

// Per-frame lateral offsets of one band (w_left[i] > w_right[i]).
struct BandOffsets {
  std::span<const double> left;
  std::span<const double> right;
};

// Image-space polygons of one band seen from frames[view_index], ordered
// far to near (descending segment index). Segments entirely behind the near
// plane are dropped.
std::vector<ImageQuad> lane_polygons(std::span<const CameraFrame> frames,
                                     const CameraModel& model,
                                     const RoadFrame& road, BandOffsets band,
                                     int view_index, double z_near = 0.1);

}  // namespace lanekit
