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

#include <algorithm>
#include <chrono>
#include <cmath>

#include <json.hpp>

#include "lanekit/error.hpp"

namespace lanekit {
namespace {

using nlohmann::json;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

[[noreturn]] void parse_fail(const std::string& what) {
  throw Error(ErrorCode::kParseError, what);
}

template <class T>
T get(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) parse_fail(std::string("missing field '") + key + "'");
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    parse_fail(std::string("bad type for field '") + key + "'");
  }
}

json vec3_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

Vec3 vec3_from(const json& j, const char* key) {
  const auto arr = get<std::vector<double>>(j, key);
  if (arr.size() != 3) parse_fail(std::string("field '") + key + "' needs 3 numbers");
  return {arr[0], arr[1], arr[2]};
}

json road_json(const RoadFrame& r) {
  return {{"h", r.height},
          {"n", vec3_json(r.normal)},
          {"f", vec3_json(r.forward)},
          {"r", vec3_json(r.across)}};
}

RoadFrame road_from(const json& j) {
  if (!j.is_object()) parse_fail("road_frame must be an object");
  RoadFrame r;
  r.height = get<double>(j, "h");
  r.normal = vec3_from(j, "n");
  r.forward = vec3_from(j, "f");
  r.across = vec3_from(j, "r");
  try {
    r.validate();
  } catch (const Error& e) {
    parse_fail(std::string("road_frame: ") + e.what());
  }
  return r;
}

json band_json(const LaneBand& b) {
  return {{"band_id", b.band_id},
          {"kind", to_string(b.kind)},
          {"side_order", b.side_order},
          {"left_w", b.left_w},
          {"right_w", b.right_w}};
}

LaneBand band_from(const json& j) {
  LaneBand b;
  b.band_id = get<int>(j, "band_id");
  b.kind = parse_band_kind(get<std::string>(j, "kind"));
  b.side_order = get<int>(j, "side_order");
  b.left_w = get<std::vector<double>>(j, "left_w");
  b.right_w = get<std::vector<double>>(j, "right_w");
  return b;
}

json edit_json(const EditCommand& cmd) {
  json j = std::visit(
      Overloaded{
          [](const edit::AdjustHeight& e) -> json {
            return {{"kind", "adjust_height"}, {"delta", e.delta}};
          },
          [](const edit::AdjustWidth& e) -> json {
            json out = {{"kind", "adjust_width"},
                        {"band_id", e.band_id},
                        {"side", to_string(e.side)},
                        {"delta", e.delta}};
            if (e.from_frame) out["from_frame"] = *e.from_frame;
            return out;
          },
          [](const edit::AddBand& e) -> json {
            return {{"kind", "add_band"},
                    {"side", to_string(e.side)},
                    {"band_kind", to_string(e.kind)},
                    {"width", e.width}};
          },
          [](const edit::SetCrop& e) -> json {
            return {{"kind", "set_crop"}, {"rows", e.rows}};
          },
          [](const edit::SetHorizon& e) -> json {
            return {{"kind", "set_horizon"}, {"rows", e.rows}};
          },
          [](const edit::Reject&) -> json { return {{"kind", "reject"}}; },
          [](const edit::SetSceneType& e) -> json {
            return {{"kind", "set_scene_type"}, {"scene_type", to_string(e.type)}};
          },
      },
      cmd.payload);
  j["timestamp"] = cmd.timestamp_ms;
  return j;
}

EditCommand edit_from(const json& j) {
  if (!j.is_object()) parse_fail("edit command must be an object");
  const auto kind = get<std::string>(j, "kind");
  EditCommand cmd;
  cmd.timestamp_ms = j.contains("timestamp") ? get<std::int64_t>(j, "timestamp") : 0;
  try {
    if (kind == "adjust_height") {
      cmd.payload = edit::AdjustHeight{get<double>(j, "delta")};
    } else if (kind == "adjust_width") {
      edit::AdjustWidth e;
      e.band_id = get<int>(j, "band_id");
      e.side = parse_side(get<std::string>(j, "side"));
      e.delta = get<double>(j, "delta");
      if (j.contains("from_frame") && !j["from_frame"].is_null()) {
        e.from_frame = get<int>(j, "from_frame");
      }
      cmd.payload = e;
    } else if (kind == "add_band") {
      edit::AddBand e;
      e.side = parse_side(get<std::string>(j, "side"));
      e.kind = parse_band_kind(get<std::string>(j, "band_kind"));
      e.width = get<double>(j, "width");
      cmd.payload = e;
    } else if (kind == "set_crop") {
      cmd.payload = edit::SetCrop{get<int>(j, "rows")};
    } else if (kind == "set_horizon") {
      cmd.payload = edit::SetHorizon{get<int>(j, "rows")};
    } else if (kind == "reject") {
      cmd.payload = edit::Reject{};
    } else if (kind == "set_scene_type") {
      cmd.payload =
          edit::SetSceneType{parse_scene_type(get<std::string>(j, "scene_type"))};
    } else {
      parse_fail("unknown edit kind '" + kind + "'");
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kParseError) throw;
    parse_fail(e.what());
  }
  return cmd;
}

json origin_json(const ProjectOrigin& o) {
  return {{"road_frame", road_json(o.road)},
          {"default_width", o.default_width},
          {"frame_count", o.frame_count},
          {"image_height", o.image_height}};
}

}  // namespace

std::string_view to_string(BandKind kind) {
  switch (kind) {
    case BandKind::kEgoLane: return "ego_lane";
    case BandKind::kLane: return "lane";
    case BandKind::kNonRoadBand: return "non_road_band";
  }
  return "lane";
}

std::string_view to_string(Side side) {
  return side == Side::kLeft ? "left" : "right";
}

std::string_view to_string(SceneType type) {
  switch (type) {
    case SceneType::kUnset: return "unset";
    case SceneType::kUrban: return "urban";
    case SceneType::kHighway: return "highway";
    case SceneType::kRural: return "rural";
  }
  return "unset";
}

std::string_view to_string(ProjectStatus status) {
  return status == ProjectStatus::kActive ? "active" : "rejected";
}

BandKind parse_band_kind(std::string_view s) {
  if (s == "ego_lane") return BandKind::kEgoLane;
  if (s == "lane") return BandKind::kLane;
  if (s == "non_road_band" || s == "non_road") return BandKind::kNonRoadBand;
  throw Error(ErrorCode::kParseError, "unknown band kind '" + std::string(s) + "'");
}

Side parse_side(std::string_view s) {
  if (s == "left") return Side::kLeft;
  if (s == "right") return Side::kRight;
  throw Error(ErrorCode::kParseError, "unknown side '" + std::string(s) + "'");
}

SceneType parse_scene_type(std::string_view s) {
  if (s == "unset") return SceneType::kUnset;
  if (s == "urban") return SceneType::kUrban;
  if (s == "highway") return SceneType::kHighway;
  if (s == "rural") return SceneType::kRural;
  throw Error(ErrorCode::kParseError, "unknown scene type '" + std::string(s) + "'");
}

double quantize(double meters) { return std::round(meters * 1e6) / 1e6; }

std::string edit_kind(const EditCommand& cmd) {
  return edit_json(cmd)["kind"].get<std::string>();
}

std::string edit_to_json(const EditCommand& cmd) { return edit_json(cmd).dump(); }

EditCommand edit_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    parse_fail(e.what());
  }
  return edit_from(j);
}

std::int64_t now_ms() {
  using namespace std::chrono;
  return duration_cast<milliseconds>(system_clock::now().time_since_epoch())
      .count();
}

AnnotationProject AnnotationProject::create(const ProjectOrigin& origin) {
  if (origin.frame_count <= 0) {
    throw Error(ErrorCode::kOutOfRange, "project needs at least one frame");
  }
  if (!(origin.default_width > 0.0)) {
    throw Error(ErrorCode::kInvertedBand, "default lane width must be positive");
  }
  origin.road.validate();
  AnnotationProject p;
  p.origin_ = origin;
  p.origin_.road.height = quantize(origin.road.height);
  p.origin_.default_width = quantize(origin.default_width);
  if (!(p.origin_.road.height > 0.0)) {
    throw Error(ErrorCode::kInvalidHeight, "camera height must be positive");
  }
  p.road_ = p.origin_.road;
  LaneBand ego;
  ego.band_id = 1;
  ego.kind = BandKind::kEgoLane;
  ego.side_order = 0;
  const double half = quantize(p.origin_.default_width / 2.0);
  ego.left_w.assign(origin.frame_count, half);
  ego.right_w.assign(origin.frame_count, -half);
  p.bands_.push_back(std::move(ego));
  return p;
}

AnnotationProject AnnotationProject::replay(const ProjectOrigin& origin,
                                            std::span<const EditCommand> log) {
  AnnotationProject p = create(origin);
  for (const EditCommand& cmd : log) p.apply(cmd);
  return p;
}

AnnotationProject AnnotationProject::replay_prefix(std::size_t count) const {
  count = std::min(count, edit_log_.size());
  return replay(origin_, std::span(edit_log_).first(count));
}

int AnnotationProject::apply(const EditCommand& cmd) {
  const int result = apply_payload(cmd.payload);
  edit_log_.push_back(cmd);
  // Store the normalized command so replay sees exactly what was applied.
  std::visit(Overloaded{
                 [](edit::AdjustHeight& e) { e.delta = quantize(e.delta); },
                 [](edit::AdjustWidth& e) { e.delta = quantize(e.delta); },
                 [](edit::AddBand& e) { e.width = quantize(e.width); },
                 [](auto&) {},
             },
             edit_log_.back().payload);
  return result;
}

void AnnotationProject::require_active() const {
  if (status_ != ProjectStatus::kActive) {
    throw Error(ErrorCode::kRejectedSequence, "project has been rejected");
  }
}

LaneBand* AnnotationProject::band_by_order(int side_order) {
  for (auto& b : bands_) {
    if (b.side_order == side_order) return &b;
  }
  return nullptr;
}

int AnnotationProject::next_band_id() const {
  int max_id = 0;
  for (const auto& b : bands_) max_id = std::max(max_id, b.band_id);
  return max_id + 1;
}

const LaneBand* AnnotationProject::find_band(int band_id) const {
  for (const auto& b : bands_) {
    if (b.band_id == band_id) return &b;
  }
  return nullptr;
}

const LaneBand& AnnotationProject::ego() const {
  for (const auto& b : bands_) {
    if (b.kind == BandKind::kEgoLane) return b;
  }
  throw Error(ErrorCode::kUnknownBand, "project has no ego band");
}

int AnnotationProject::apply_payload(const EditPayload& payload) {
  return std::visit(
      Overloaded{
          [this](const edit::AdjustHeight& e) {
            require_active();
            const double h = quantize(road_.height + quantize(e.delta));
            if (!(h > 0.0)) {
              throw Error(ErrorCode::kInvalidHeight,
                          "camera height would become non-positive");
            }
            road_.height = h;
            return 0;
          },
          [this](const edit::AdjustWidth& e) {
            require_active();
            auto it = std::find_if(bands_.begin(), bands_.end(),
                                   [&](const LaneBand& b) {
                                     return b.band_id == e.band_id;
                                   });
            if (it == bands_.end()) {
              throw Error(ErrorCode::kUnknownBand,
                          "no band " + std::to_string(e.band_id));
            }
            const int first = e.from_frame.value_or(0);
            if (first < 0 || first >= origin_.frame_count) {
              throw Error(ErrorCode::kOutOfRange, "from_frame outside sequence");
            }
            const double delta = quantize(e.delta);
            LaneBand band = *it;
            const int neighbor_order =
                band.side_order + (e.side == Side::kLeft ? -1 : 1);
            LaneBand* neighbor_ptr = band_by_order(neighbor_order);
            std::optional<LaneBand> neighbor;
            if (neighbor_ptr) neighbor = *neighbor_ptr;

            for (int j = first; j < origin_.frame_count; ++j) {
              if (e.side == Side::kLeft) {
                band.left_w[j] = quantize(band.left_w[j] + delta);
                if (neighbor) neighbor->right_w[j] = band.left_w[j];
              } else {
                band.right_w[j] = quantize(band.right_w[j] + delta);
                if (neighbor) neighbor->left_w[j] = band.right_w[j];
              }
              if (!(band.left_w[j] > band.right_w[j]) ||
                  (neighbor && !(neighbor->left_w[j] > neighbor->right_w[j]))) {
                throw Error(ErrorCode::kInvertedBand,
                            "edit collapses a band at frame " + std::to_string(j));
              }
            }
            *it = std::move(band);
            if (neighbor) *band_by_order(neighbor_order) = std::move(*neighbor);
            return 0;
          },
          [this](const edit::AddBand& e) {
            require_active();
            const double width = quantize(e.width);
            if (!(width > 0.0)) {
              throw Error(ErrorCode::kInvertedBand, "band width must be positive");
            }
            if (e.kind == BandKind::kEgoLane) {
              throw Error(ErrorCode::kInvalidParams, "a project has one ego lane");
            }
            const LaneBand& outer =
                e.side == Side::kLeft ? bands_.front() : bands_.back();
            if (outer.kind == BandKind::kNonRoadBand) {
              throw Error(ErrorCode::kInvalidParams,
                          "non-road bands must stay outermost");
            }
            LaneBand band;
            band.band_id = next_band_id();
            band.kind = e.kind;
            band.side_order = outer.side_order + (e.side == Side::kLeft ? -1 : 1);
            if (e.side == Side::kLeft) {
              band.right_w = outer.left_w;
              band.left_w.reserve(outer.left_w.size());
              for (double w : outer.left_w) band.left_w.push_back(quantize(w + width));
              bands_.insert(bands_.begin(), std::move(band));
              return bands_.front().band_id;
            }
            band.left_w = outer.right_w;
            band.right_w.reserve(outer.right_w.size());
            for (double w : outer.right_w) band.right_w.push_back(quantize(w - width));
            bands_.push_back(std::move(band));
            return bands_.back().band_id;
          },
          [this](const edit::SetCrop& e) {
            require_active();
            if (e.rows < 0 || e.rows > origin_.image_height) {
              throw Error(ErrorCode::kOutOfRange, "crop rows outside image");
            }
            crop_top_rows_ = e.rows;
            return 0;
          },
          [this](const edit::SetHorizon& e) {
            require_active();
            if (e.rows < 0 || e.rows > origin_.image_height) {
              throw Error(ErrorCode::kOutOfRange, "horizon rows outside image");
            }
            horizon_rows_ = e.rows;
            return 0;
          },
          [this](const edit::Reject&) {
            require_active();
            status_ = ProjectStatus::kRejected;
            return 0;
          },
          [this](const edit::SetSceneType& e) {
            scene_type_ = e.type;
            return 0;
          },
      },
      payload);
}

void AnnotationProject::adjust_height(double delta) {
  apply({edit::AdjustHeight{delta}, now_ms()});
}

void AnnotationProject::adjust_width(int band_id, Side side, double delta,
                                     std::optional<int> from_frame) {
  apply({edit::AdjustWidth{band_id, side, delta, from_frame}, now_ms()});
}

int AnnotationProject::add_band(Side side, BandKind kind, double width) {
  return apply({edit::AddBand{side, kind, width}, now_ms()});
}

void AnnotationProject::set_crop(int rows) { apply({edit::SetCrop{rows}, now_ms()}); }

void AnnotationProject::set_horizon(int rows) {
  apply({edit::SetHorizon{rows}, now_ms()});
}

void AnnotationProject::reject() { apply({edit::Reject{}, now_ms()}); }

void AnnotationProject::set_scene_type(SceneType type) {
  apply({edit::SetSceneType{type}, now_ms()});
}

void AnnotationProject::check_invariants() const {
  int egos = 0;
  for (std::size_t k = 0; k < bands_.size(); ++k) {
    const LaneBand& b = bands_[k];
    if (b.kind == BandKind::kEgoLane) ++egos;
    if (static_cast<int>(b.left_w.size()) != origin_.frame_count ||
        static_cast<int>(b.right_w.size()) != origin_.frame_count) {
      throw Error(ErrorCode::kOutOfRange, "band offsets do not cover sequence");
    }
    for (int j = 0; j < origin_.frame_count; ++j) {
      if (!(b.left_w[j] > b.right_w[j])) {
        throw Error(ErrorCode::kInvertedBand, "inverted band " + std::to_string(b.band_id));
      }
    }
    if (k > 0) {
      const LaneBand& left = bands_[k - 1];
      if (left.side_order + 1 != b.side_order || left.right_w != b.left_w) {
        throw Error(ErrorCode::kInvertedBand, "bands do not tile");
      }
    }
  }
  if (egos != 1) throw Error(ErrorCode::kInvertedBand, "expected one ego band");
}

AnnotationProject init_project(const Sequence& sequence, const RoadFrame& road,
                               double default_width, std::string sequence_ref) {
  ProjectOrigin origin;
  origin.sequence_ref = sequence_ref.empty() ? sequence.name : std::move(sequence_ref);
  origin.road = road;
  origin.default_width = default_width;
  origin.frame_count = sequence.frame_count();
  origin.image_height = sequence.camera.height;
  return AnnotationProject::create(origin);
}

AnnotationProject reinit_project(const AnnotationProject& previous,
                                 const RoadFrame& road, double default_width) {
  if (!previous.active()) {
    throw Error(ErrorCode::kRejectedSequence,
                "sequence '" + previous.origin().sequence_ref + "' was rejected");
  }
  ProjectOrigin origin = previous.origin();
  origin.road = road;
  origin.default_width = default_width;
  return AnnotationProject::create(origin);
}

std::string save_project(const AnnotationProject& p) {
  json bands = json::array();
  for (const auto& b : p.bands()) bands.push_back(band_json(b));
  json log = json::array();
  for (const auto& c : p.edit_log()) log.push_back(edit_json(c));
  json doc = {{"version", kProjectFormatVersion},
              {"sequence_ref", p.origin().sequence_ref},
              {"origin", origin_json(p.origin())},
              {"road_frame", road_json(p.road())},
              {"bands", bands},
              {"crop_top_rows", p.crop_top_rows()},
              {"horizon_rows", p.horizon_rows()},
              {"scene_type", to_string(p.scene_type())},
              {"status", to_string(p.status())},
              {"edit_log", log}};
  return doc.dump(1);
}

AnnotationProject load_project(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    parse_fail(e.what());
  }
  if (!doc.is_object()) parse_fail("project must be an object");
  const int version = get<int>(doc, "version");
  if (version != kProjectFormatVersion) {
    throw Error(ErrorCode::kVersionMismatch,
                "project version " + std::to_string(version) + " unsupported");
  }
  AnnotationProject p;
  try {
  p.origin_.sequence_ref = get<std::string>(doc, "sequence_ref");
  const json& origin = doc.at("origin");
  p.origin_.road = road_from(origin.at("road_frame"));
  p.origin_.default_width = get<double>(origin, "default_width");
  p.origin_.frame_count = get<int>(origin, "frame_count");
  p.origin_.image_height = get<int>(origin, "image_height");
  p.road_ = road_from(doc.at("road_frame"));
  const json& bands = doc.at("bands");
  if (!bands.is_array()) parse_fail("bands must be an array");
  for (const auto& b : bands) p.bands_.push_back(band_from(b));
  std::sort(p.bands_.begin(), p.bands_.end(),
            [](const LaneBand& a, const LaneBand& b) {
              return a.side_order < b.side_order;
            });
  p.crop_top_rows_ = get<int>(doc, "crop_top_rows");
  p.horizon_rows_ = get<int>(doc, "horizon_rows");
  p.scene_type_ = parse_scene_type(get<std::string>(doc, "scene_type"));
  const auto status = get<std::string>(doc, "status");
  if (status == "active") {
    p.status_ = ProjectStatus::kActive;
  } else if (status == "rejected") {
    p.status_ = ProjectStatus::kRejected;
  } else {
    parse_fail("unknown status '" + status + "'");
  }
  const json& log = doc.at("edit_log");
  if (!log.is_array()) parse_fail("edit_log must be an array");
  for (const auto& c : log) p.edit_log_.push_back(edit_from(c));
  } catch (const json::exception& e) {
    parse_fail(e.what());
  }
  try {
    p.check_invariants();
  } catch (const Error& e) {
    parse_fail(std::string("inconsistent project: ") + e.what());
  }
  return p;
}

std::string save_road_frame(const RoadFrame& road) { return road_json(road).dump(1); }

RoadFrame load_road_frame(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    parse_fail(e.what());
  }
  // Accept a bare RoadFrame or any document carrying one under "road_frame".
  if (doc.is_object() && doc.contains("road_frame")) return road_from(doc["road_frame"]);
  return road_from(doc);
}

}  // namespace lanekit
