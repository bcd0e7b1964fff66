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

#include "lanekit/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "lanekit/error.hpp"

namespace lanekit {
namespace {

using nlohmann::json;

constexpr double kEarthRadius = 6371000.0;

[[noreturn]] void parse_fail(const std::string& path, const std::string& what) {
  throw Error(ErrorCode::kParseError, path + ": " + what);
}

const json& field(const json& obj, const char* key, const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end()) parse_fail(path + "." + key, "missing required field");
  return *it;
}

double number(const json& j, const std::string& path) {
  if (!j.is_number()) parse_fail(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) parse_fail(path, "non-finite number");
  return v;
}

int integer(const json& j, const std::string& path) {
  if (!j.is_number_integer()) parse_fail(path, "expected an integer");
  return j.get<int>();
}

Vec3 vec3(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 3) parse_fail(path, "expected 3 numbers");
  return {number(j[0], path + "[0]"), number(j[1], path + "[1]"),
          number(j[2], path + "[2]")};
}

json vec3_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

json camera_json(const CameraModel& c) {
  return {{"projection_type", "perspective"},
          {"focal", c.normalized_focal},
          {"k1", c.k1},
          {"k2", c.k2},
          {"width", c.width},
          {"height", c.height}};
}

CameraModel parse_camera(const json& j, const std::string& path) {
  if (!j.is_object()) parse_fail(path, "expected an object");
  if (auto it = j.find("projection_type"); it != j.end()) {
    if (!it->is_string() || it->get<std::string>() != "perspective") {
      parse_fail(path + ".projection_type", "only 'perspective' is supported");
    }
  }
  CameraModel c;
  c.normalized_focal = number(field(j, "focal", path), path + ".focal");
  c.k1 = j.contains("k1") ? number(j["k1"], path + ".k1") : 0.0;
  c.k2 = j.contains("k2") ? number(j["k2"], path + ".k2") : 0.0;
  c.width = integer(field(j, "width", path), path + ".width");
  c.height = integer(field(j, "height", path), path + ".height");
  try {
    c.validate();
  } catch (const Error& e) {
    parse_fail(path, e.what());
  }
  return c;
}

json frame_json(const CameraFrame& f) {
  json j = {{"index", f.index},
            {"name", f.name},
            {"image_ref", f.image_ref},
            {"center", vec3_json(f.center)}};
  json rot = json::array();
  const auto& m = f.rotation.matrix();
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) rot.push_back(m(r, c));
  }
  j["rotation"] = rot;
  if (f.geotag) {
    j["geotag"] = {f.geotag->latitude_deg, f.geotag->longitude_deg};
  }
  if (f.gps_position) j["gps_position"] = vec3_json(*f.gps_position);
  return j;
}

CameraFrame parse_frame(const json& j, const std::string& path) {
  CameraFrame f;
  f.index = integer(field(j, "index", path), path + ".index");
  const json& name = field(j, "name", path);
  if (!name.is_string()) parse_fail(path + ".name", "expected a string");
  f.name = name.get<std::string>();
  f.image_ref = j.value("image_ref", f.name);
  f.center = vec3(field(j, "center", path), path + ".center");
  const json& rot = field(j, "rotation", path);
  if (!rot.is_array() || rot.size() != 9) {
    parse_fail(path + ".rotation", "expected 9 numbers (row-major)");
  }
  Eigen::Matrix3d m;
  for (int k = 0; k < 9; ++k) m(k / 3, k % 3) = number(rot[k], path + ".rotation");
  try {
    f.rotation = Rotation(m);
  } catch (const Error& e) {
    parse_fail(path + ".rotation", e.what());
  }
  if (auto it = j.find("geotag"); it != j.end()) {
    if (!it->is_array() || it->size() != 2) {
      parse_fail(path + ".geotag", "expected [lat, lon]");
    }
    f.geotag = Geotag{number((*it)[0], path + ".geotag[0]"),
                      number((*it)[1], path + ".geotag[1]")};
  }
  if (auto it = j.find("gps_position"); it != j.end()) {
    f.gps_position = vec3(*it, path + ".gps_position");
  }
  return f;
}

}  // namespace

Vec3 RawShot::center() const {
  return -(camera_to_world() * translation);
}

Rotation RawShot::camera_to_world() const {
  return Rotation::from_axis_angle(rotation_aa).inverse();
}

RawReconstruction parse_reconstruction(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kParseError, e.what());
  }
  // Reconstruction tools commonly emit a list of partial reconstructions; only
  // a single one per sequence is accepted.
  if (doc.is_array()) {
    if (doc.size() != 1) {
      parse_fail("$", "expected exactly one reconstruction, got " +
                          std::to_string(doc.size()));
    }
    doc = doc[0];
  }
  if (!doc.is_object()) parse_fail("$", "expected an object");

  RawReconstruction recon;
  const json& cameras = field(doc, "cameras", "$");
  if (!cameras.is_object()) parse_fail("$.cameras", "expected an object");
  for (const auto& [name, cam] : cameras.items()) {
    recon.cameras.emplace(name, parse_camera(cam, "$.cameras." + name));
  }

  const json& shots = field(doc, "shots", "$");
  if (!shots.is_object()) parse_fail("$.shots", "expected an object");
  for (const auto& [name, s] : shots.items()) {
    const std::string path = "$.shots." + name;
    if (!s.is_object()) parse_fail(path, "expected an object");
    RawShot shot;
    shot.name = name;
    const json& cam = field(s, "camera", path);
    if (!cam.is_string()) parse_fail(path + ".camera", "expected a string");
    shot.camera = cam.get<std::string>();
    if (!recon.cameras.contains(shot.camera)) {
      throw Error(ErrorCode::kUnknownCameraModel,
                  path + ".camera: '" + shot.camera + "' is not declared");
    }
    shot.rotation_aa = vec3(field(s, "rotation", path), path + ".rotation");
    shot.translation =
        vec3(field(s, "translation", path), path + ".translation");
    if (auto it = s.find("gps_position"); it != s.end() && !it->is_null()) {
      shot.gps_position = vec3(*it, path + ".gps_position");
    }
    if (auto it = s.find("capture_order"); it != s.end()) {
      if (!it->is_number_integer()) {
        parse_fail(path + ".capture_order", "expected an integer");
      }
      shot.capture_order = it->get<long>();
    }
    try {
      (void)shot.camera_to_world();
    } catch (const Error& e) {
      parse_fail(path + ".rotation", e.what());
    }
    recon.shots.push_back(std::move(shot));
  }
  std::sort(recon.shots.begin(), recon.shots.end(),
            [](const RawShot& a, const RawShot& b) {
              if (a.capture_order != b.capture_order) {
                return a.capture_order < b.capture_order;
              }
              return a.name < b.name;
            });
  return recon;
}

std::string serialize_reconstruction(const RawReconstruction& recon) {
  json cameras = json::object();
  for (const auto& [name, cam] : recon.cameras) cameras[name] = camera_json(cam);
  json shots = json::object();
  for (const RawShot& s : recon.shots) {
    json j = {{"camera", s.camera},
              {"rotation", vec3_json(s.rotation_aa)},
              {"translation", vec3_json(s.translation)},
              {"capture_order", s.capture_order}};
    if (s.gps_position) j["gps_position"] = vec3_json(*s.gps_position);
    shots[s.name] = std::move(j);
  }
  return json{{"cameras", cameras}, {"shots", shots}}.dump(1);
}

std::map<std::string, Geotag> parse_gps_csv(std::string_view text) {
  std::map<std::string, Geotag> out;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::istringstream row(line);
    std::string name, lat, lon;
    if (!std::getline(row, name, ',') || !std::getline(row, lat, ',') ||
        !std::getline(row, lon, ',')) {
      throw Error(ErrorCode::kParseError,
                  "gps line " + std::to_string(line_no) + ": expected 3 fields");
    }
    try {
      std::size_t used_lat = 0, used_lon = 0;
      const double la = std::stod(lat, &used_lat);
      const double lo = std::stod(lon, &used_lon);
      out[name] = {la, lo};
    } catch (const std::exception&) {
      if (line_no == 1) continue;  // header
      throw Error(ErrorCode::kParseError,
                  "gps line " + std::to_string(line_no) + ": bad coordinate");
    }
  }
  return out;
}

FrameSet frames_from_reconstruction(const RawReconstruction& recon,
                                    const std::map<std::string, Geotag>& gps) {
  FrameSet set;
  for (const RawShot& shot : recon.shots) {
    if (set.camera_name.empty()) {
      set.camera_name = shot.camera;
      set.camera = recon.cameras.at(shot.camera);
    } else if (shot.camera != set.camera_name) {
      throw Error(ErrorCode::kParseError,
                  "shot '" + shot.name + "' uses camera '" + shot.camera +
                      "' but the sequence uses '" + set.camera_name + "'");
    }
    CameraFrame f;
    f.index = static_cast<int>(set.frames.size());
    f.name = shot.name;
    f.image_ref = shot.name;
    f.center = shot.center();
    f.rotation = shot.camera_to_world();
    f.gps_position = shot.gps_position;
    if (auto it = gps.find(shot.name); it != gps.end()) f.geotag = it->second;
    set.frames.push_back(std::move(f));
  }
  return set;
}

double geo_distance(const Geotag& a, const Geotag& b) {
  constexpr double kDeg = std::numbers::pi / 180.0;
  const double phi1 = a.latitude_deg * kDeg;
  const double phi2 = b.latitude_deg * kDeg;
  const double dphi = phi2 - phi1;
  const double dlambda = (b.longitude_deg - a.longitude_deg) * kDeg;
  const double s1 = std::sin(dphi / 2.0);
  const double s2 = std::sin(dlambda / 2.0);
  const double h = s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2;
  return 2.0 * kEarthRadius * std::asin(std::min(1.0, std::sqrt(h)));
}

double frame_distance(const CameraFrame& a, const CameraFrame& b) {
  if (a.geotag && b.geotag) return geo_distance(*a.geotag, *b.geotag);
  if (a.gps_position && b.gps_position) {
    return (*a.gps_position - *b.gps_position).norm();
  }
  return (a.center - b.center).norm();
}

std::vector<CameraFrame> filter_by_distance(std::span<const CameraFrame> frames,
                                            double min_dist) {
  std::vector<CameraFrame> kept;
  for (const CameraFrame& f : frames) {
    if (kept.empty() || frame_distance(kept.back(), f) >= min_dist) {
      kept.push_back(f);
    }
  }
  return kept;
}

std::vector<double> cumulative_arc_length(std::span<const CameraFrame> frames) {
  std::vector<double> cum;
  cum.reserve(frames.size());
  double total = 0.0;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    if (i > 0) total += (frames[i].center - frames[i - 1].center).norm();
    cum.push_back(total);
  }
  return cum;
}

int annotatable_end_index(std::span<const double> cumulative, double tail) {
  if (cumulative.empty()) return -1;
  const double end = cumulative.back();
  for (int k = static_cast<int>(cumulative.size()) - 1; k >= 0; --k) {
    if (end - cumulative[k] >= tail - 1e-9) return k;
  }
  return -1;
}

std::vector<std::vector<CameraFrame>> split_by_length(
    std::span<const CameraFrame> frames, double max_len) {
  std::vector<std::vector<CameraFrame>> pieces;
  double start = 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    if (i > 0) total += (frames[i].center - frames[i - 1].center).norm();
    if (pieces.empty() || total - start > max_len + 1e-9) {
      pieces.emplace_back();
      start = total;
    }
    pieces.back().push_back(frames[i]);
  }
  return pieces;
}

Sequence make_sequence(std::string name, const CameraModel& camera,
                       std::vector<CameraFrame> frames, double tail_length) {
  Sequence seq;
  seq.name = std::move(name);
  seq.camera = camera;
  seq.frames = std::move(frames);
  seq.cumulative_length = cumulative_arc_length(seq.frames);
  seq.annotatable_end_index =
      annotatable_end_index(seq.cumulative_length, tail_length);
  return seq;
}

SplitResult split_sequences(std::span<const CameraFrame> frames,
                            const CameraModel& camera,
                            const SplitOptions& options) {
  SplitResult result;
  const auto pieces = split_by_length(frames, options.max_length);
  for (std::size_t p = 0; p < pieces.size(); ++p) {
    std::ostringstream name;
    name << options.name_prefix << '_' << (p < 10 ? "00" : p < 100 ? "0" : "")
         << p;
    Sequence seq = make_sequence(name.str(), camera, pieces[p],
                                 options.tail_length);
    if (seq.annotatable_end_index < 0) {
      std::ostringstream msg;
      msg << error_name(ErrorCode::kSequenceTooShort) << ": piece " << p
          << " is " << seq.length() << " m long, shorter than the "
          << options.tail_length << " m tail; dropped";
      result.dropped.push_back({static_cast<int>(p), seq.length(), msg.str()});
      continue;
    }
    result.sequences.push_back(std::move(seq));
  }
  return result;
}

std::string save_sequence(const Sequence& sequence) {
  json frames = json::array();
  for (const auto& f : sequence.frames) frames.push_back(frame_json(f));
  json doc = {{"version", 1},
              {"name", sequence.name},
              {"camera", camera_json(sequence.camera)},
              {"frames", frames},
              {"cumulative_length", sequence.cumulative_length},
              {"annotatable_end_index", sequence.annotatable_end_index}};
  return doc.dump(1);
}

Sequence load_sequence(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kParseError, e.what());
  }
  if (!doc.is_object()) parse_fail("$", "expected an object");
  if (integer(field(doc, "version", "$"), "$.version") != 1) {
    throw Error(ErrorCode::kVersionMismatch, "unsupported sequence version");
  }
  Sequence seq;
  const json& name = field(doc, "name", "$");
  if (!name.is_string()) parse_fail("$.name", "expected a string");
  seq.name = name.get<std::string>();
  seq.camera = parse_camera(field(doc, "camera", "$"), "$.camera");
  const json& frames = field(doc, "frames", "$");
  if (!frames.is_array()) parse_fail("$.frames", "expected an array");
  for (std::size_t k = 0; k < frames.size(); ++k) {
    seq.frames.push_back(
        parse_frame(frames[k], "$.frames[" + std::to_string(k) + "]"));
  }
  const json& cum = field(doc, "cumulative_length", "$");
  if (!cum.is_array() || cum.size() != seq.frames.size()) {
    parse_fail("$.cumulative_length", "expected one entry per frame");
  }
  for (const auto& v : cum) seq.cumulative_length.push_back(number(v, "$.cumulative_length"));
  seq.annotatable_end_index = integer(field(doc, "annotatable_end_index", "$"),
                                      "$.annotatable_end_index");
  if (seq.annotatable_end_index >= seq.frame_count()) {
    parse_fail("$.annotatable_end_index", "beyond last frame");
  }
  return seq;
}

}  // namespace lanekit
