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

#include "lanekit/geometry.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "lanekit/error.hpp"

namespace lanekit {
namespace {

bool is_finite(const Vec3& v) { return v.allFinite(); }

// Projection without the near-plane guard, for vertices already clipped.
Pixel project_clipped(const CameraModel& model, const Vec3& p) {
  const double x = p.x() / p.z();
  const double y = p.y() / p.z();
  const double d = distortion_factor(model, x * x + y * y);
  const double scale = model.normalized_focal * d * model.max_dimension();
  return {scale * x + model.width / 2.0, scale * y + model.height / 2.0};
}

}  // namespace

Rotation::Rotation(const Eigen::Matrix3d& matrix) : matrix_(matrix) {
  if (!matrix.allFinite()) {
    throw Error(ErrorCode::kInvalidRotation, "non-finite rotation entries");
  }
  const double ortho_err =
      (matrix * matrix.transpose() - Eigen::Matrix3d::Identity())
          .cwiseAbs()
          .maxCoeff();
  const double det_err = std::abs(matrix.determinant() - 1.0);
  if (ortho_err > kTolerance || det_err > kTolerance) {
    std::ostringstream os;
    os << "not a proper rotation (orthonormality error " << ortho_err
       << ", determinant error " << det_err << ")";
    throw Error(ErrorCode::kInvalidRotation, os.str());
  }
}

Rotation Rotation::from_axis_angle(const Vec3& axis_angle) {
  if (!is_finite(axis_angle)) {
    throw Error(ErrorCode::kInvalidRotation, "non-finite axis-angle");
  }
  const double angle = axis_angle.norm();
  if (angle == 0.0) return Rotation();
  const Eigen::AngleAxisd aa(angle, axis_angle / angle);
  return Rotation(aa.toRotationMatrix());
}

Rotation Rotation::from_axes(const Vec3& right, const Vec3& down,
                             const Vec3& forward) {
  Eigen::Matrix3d m;
  m.col(0) = right;
  m.col(1) = down;
  m.col(2) = forward;
  return Rotation(m);
}

Vec3 Rotation::to_axis_angle() const {
  const Eigen::AngleAxisd aa(matrix_);
  if (aa.angle() == 0.0) return Vec3::Zero();
  return aa.angle() * aa.axis();
}

void CameraModel::validate() const {
  if (!(normalized_focal > 0.0) || !std::isfinite(normalized_focal)) {
    throw Error(ErrorCode::kInvalidCamera, "normalized focal must be > 0");
  }
  if (width <= 0 || height <= 0) {
    throw Error(ErrorCode::kInvalidCamera, "image size must be positive");
  }
  if (!std::isfinite(k1) || !std::isfinite(k2)) {
    throw Error(ErrorCode::kInvalidCamera, "non-finite distortion");
  }
}

RoadFrame RoadFrame::make(double height, const Vec3& normal,
                          const Vec3& forward) {
  RoadFrame road;
  road.height = height;
  road.normal = normal.normalized();
  road.forward = forward.normalized();
  road.across = across_vector(road.forward, road.normal);
  road.validate();
  return road;
}

void RoadFrame::validate() const {
  if (!std::isfinite(height) || !is_finite(normal) || !is_finite(forward) ||
      !is_finite(across)) {
    throw Error(ErrorCode::kDegenerateFrame, "non-finite road frame");
  }
  if (std::abs(normal.norm() - 1.0) > 1e-9 ||
      std::abs(forward.norm() - 1.0) > 1e-9) {
    throw Error(ErrorCode::kDegenerateFrame, "normal/forward not unit length");
  }
  if (std::abs(across.norm() - 1.0) > 1e-6) {
    throw Error(ErrorCode::kDegenerateFrame, "across vector not unit length");
  }
  if ((across.cross(forward.cross(normal))).norm() > 1e-6 ||
      across.dot(forward.cross(normal)) <= 0.0) {
    throw Error(ErrorCode::kDegenerateFrame,
                "across vector is not forward x normal");
  }
}

Vec3 motion_vector(const Vec3& from, const Vec3& to, double eps) {
  const Vec3 delta = to - from;
  const double dist = delta.norm();
  if (!(dist > eps)) {
    throw Error(ErrorCode::kDegenerateMotion,
                "camera displacement below motion threshold");
  }
  return delta / dist;
}

Vec3 canonicalize_normal(const Vec3& v, const Vec3& down_axis) {
  return v.dot(down_axis) < 0.0 ? Vec3(-v) : v;
}

std::vector<MotionDerivatives> motion_derivatives(
    std::span<const CameraFrame> frames, const EstimationParams& params) {
  std::vector<MotionDerivatives> out;
  const int n = static_cast<int>(frames.size());
  // Interior frames 2..N-2 in one-based numbering.
  for (int i = 1; i + 2 < n; ++i) {
    const Vec3& c_prev = frames[i - 1].center;
    const Vec3& c = frames[i].center;
    const Vec3& c_next = frames[i + 1].center;
    MotionDerivatives d;
    d.frame = i;
    try {
      d.m_prev = motion_vector(c_prev, c, params.eps_motion);
      d.m_next = motion_vector(c, c_next, params.eps_motion);
      d.m_span = motion_vector(c_prev, c_next, params.eps_motion);
    } catch (const Error&) {
      continue;
    }
    const Rotation& rot = frames[i].rotation;
    d.normal = canonicalize_normal(rot.inverse_apply(d.m_prev.cross(d.m_next)),
                                   params.down_axis);
    d.forward = rot.inverse_apply(d.m_span);
    d.weight = std::max(d.m_prev.dot(d.m_next), 0.0);
    out.push_back(d);
  }
  return out;
}

Vec3 estimate_normal(std::span<const CameraFrame> frames,
                     const EstimationParams& params) {
  if (frames.size() < 4) {
    throw Error(ErrorCode::kInsufficientTurning,
                "normal estimation needs at least 4 frames");
  }
  Vec3 sum = Vec3::Zero();
  double magnitude = 0.0;
  for (const auto& d : motion_derivatives(frames, params)) {
    sum += d.normal;
    magnitude += d.normal.norm();
  }
  if (!(magnitude > params.eps_turn)) {
    throw Error(ErrorCode::kInsufficientTurning,
                "sequence has no turns to estimate the road normal from");
  }
  const Vec3 mean = sum / magnitude;
  if (!(mean.norm() > 0.0)) {
    throw Error(ErrorCode::kInsufficientTurning, "per-frame normals cancel");
  }
  return mean.normalized();
}

Vec3 estimate_forward(std::span<const CameraFrame> frames,
                      const EstimationParams& params) {
  if (frames.size() < 4) {
    throw Error(ErrorCode::kNoForwardMotion,
                "forward estimation needs at least 4 frames");
  }
  Vec3 sum = Vec3::Zero();
  double weight = 0.0;
  for (const auto& d : motion_derivatives(frames, params)) {
    sum += d.weight * d.forward;
    weight += d.weight;
  }
  if (!(weight > 0.0)) {
    throw Error(ErrorCode::kNoForwardMotion,
                "no frame pair with forward motion");
  }
  const Vec3 mean = sum / weight;
  if (!(mean.norm() > 0.0)) {
    throw Error(ErrorCode::kNoForwardMotion, "forward directions cancel");
  }
  return mean.normalized();
}

Vec3 across_vector(const Vec3& forward, const Vec3& normal) {
  if (!(std::abs(forward.dot(normal)) < 0.99)) {
    throw Error(ErrorCode::kDegenerateFrame,
                "forward and normal are (nearly) parallel");
  }
  return forward.cross(normal).normalized();
}

Vec3 ground_point(const CameraFrame& frame, const RoadFrame& road) {
  return frame.center + road.height * (frame.rotation * road.normal);
}

BorderPoints border_points(const CameraFrame& frame, const RoadFrame& road,
                           double left_offset, double right_offset) {
  if (!(left_offset > right_offset)) {
    throw Error(ErrorCode::kInvertedBand,
                "left offset must exceed right offset");
  }
  const Vec3 g = ground_point(frame, road);
  const Vec3 across = frame.rotation * road.across;
  return {g + left_offset * across, g + right_offset * across};
}

Vec3 to_camera(const CameraFrame& frame, const Vec3& world_point) {
  return frame.rotation.inverse_apply(world_point - frame.center);
}

double distortion_factor(const CameraModel& model, double rho2) {
  return 1.0 + model.k1 * rho2 + model.k2 * rho2 * rho2;
}

double distortion_validity_radius2(const CameraModel& model) {
  // d/drho [rho (1 + k1 rho^2 + k2 rho^4)] = 1 + 3 k1 x + 5 k2 x^2, x = rho^2.
  const double a = 5.0 * model.k2;
  const double b = 3.0 * model.k1;
  constexpr double kInf = std::numeric_limits<double>::infinity();
  if (a == 0.0) return b < 0.0 ? -1.0 / b : kInf;
  const double disc = b * b - 4.0 * a;
  if (disc < 0.0) return kInf;
  const double sq = std::sqrt(disc);
  double best = kInf;
  for (double root : {(-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)}) {
    if (root > 0.0 && root < best) best = root;
  }
  return best;
}

Pixel project_camera_point(const CameraModel& model, const Vec3& camera_point,
                           double z_near) {
  if (!(camera_point.z() > z_near)) {
    throw Error(ErrorCode::kBehindCamera, "point is not in front of camera");
  }
  return project_clipped(model, camera_point);
}

Pixel project(const CameraModel& model, const CameraFrame& frame,
              const Vec3& world_point, double z_near) {
  return project_camera_point(model, to_camera(frame, world_point), z_near);
}

Polygon3 clip_near_plane(std::span<const Vec3> polygon, double z_near) {
  Polygon3 out;
  const std::size_t n = polygon.size();
  for (std::size_t k = 0; k < n; ++k) {
    const Vec3& a = polygon[k];
    const Vec3& b = polygon[(k + 1) % n];
    const bool a_in = a.z() >= z_near;
    const bool b_in = b.z() >= z_near;
    if (a_in) out.push_back(a);
    if (a_in != b_in) {
      const double t = (z_near - a.z()) / (b.z() - a.z());
      Vec3 p = a + t * (b - a);
      p.z() = z_near;
      out.push_back(p);
    }
  }
  return out;
}

std::vector<ImageQuad> lane_polygons(std::span<const CameraFrame> frames,
                                     const CameraModel& model,
                                     const RoadFrame& road, BandOffsets band,
                                     int view_index, double z_near) {
  const int n = static_cast<int>(frames.size());
  if (view_index < 0 || view_index >= n) {
    throw Error(ErrorCode::kOutOfRange, "view index outside sequence");
  }
  if (band.left.size() != frames.size() || band.right.size() != frames.size()) {
    throw Error(ErrorCode::kOutOfRange, "band offsets do not cover sequence");
  }
  const CameraFrame& view = frames[view_index];
  std::vector<BorderPoints> borders;
  borders.reserve(n - view_index);
  for (int j = view_index; j < n; ++j) {
    const BorderPoints b =
        border_points(frames[j], road, band.left[j], band.right[j]);
    borders.push_back({to_camera(view, b.left), to_camera(view, b.right)});
  }

  std::vector<ImageQuad> quads;
  for (int j = n - 2; j >= view_index; --j) {
    const BorderPoints& near = borders[j - view_index];
    const BorderPoints& far = borders[j + 1 - view_index];
    const Vec3 quad[4] = {near.left, near.right, far.right, far.left};
    const Polygon3 clipped = clip_near_plane(quad, z_near);
    if (clipped.size() < 3) continue;
    ImageQuad q;
    q.segment = j;
    q.vertices.reserve(clipped.size());
    for (const Vec3& p : clipped) q.vertices.push_back(project_clipped(model, p));
    quads.push_back(std::move(q));
  }
  return quads;
}

}  // namespace lanekit
