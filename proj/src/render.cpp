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

#include "lanekit/render.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "lanekit/error.hpp"
#include "lanekit/png_io.hpp"
#include "lanekit/raster.hpp"

namespace lanekit {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

void check_pairing(const AnnotationProject& project, const Sequence& sequence) {
  if (project.frame_count() != sequence.frame_count()) {
    throw Error(ErrorCode::kSequenceMismatch,
                "project covers " + std::to_string(project.frame_count()) +
                    " frames, sequence has " +
                    std::to_string(sequence.frame_count()));
  }
}

// Runs fn(i) for i in [0, count) on a few worker threads; rethrows the first
// failure.
template <class Fn>
void parallel_for(int count, Fn fn) {
  const int workers = std::max(
      1, std::min<int>(count, static_cast<int>(std::thread::hardware_concurrency())));
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto work = [&] {
    for (int i = next++; i < count; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> threads;
  for (int w = 1; w < workers; ++w) threads.emplace_back(work);
  work();
  for (auto& t : threads) t.join();
  if (failure) std::rethrow_exception(failure);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  out.flush();
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

LabelMask LabelMask::blank(int width, int height) {
  LabelMask m;
  m.width = width;
  m.height = height;
  const std::size_t n = static_cast<std::size_t>(width) * height;
  m.class_plane.assign(n, kUnlabeled);
  m.instance_plane.assign(n, 0);
  return m;
}

std::uint8_t band_label(BandKind kind) {
  switch (kind) {
    case BandKind::kEgoLane: return kEgoLane;
    case BandKind::kLane: return kRoad;
    case BandKind::kNonRoadBand: return kNonRoad;
  }
  return kUnlabeled;
}

std::vector<DrawItem> draw_list(const AnnotationProject& project,
                                const Sequence& sequence, int frame_index,
                                double z_near) {
  check_pairing(project, sequence);
  std::vector<DrawItem> items;
  std::vector<int> side_orders;
  for (const LaneBand& band : project.bands()) {
    const auto quads = lane_polygons(sequence.frames, sequence.camera,
                                     project.road(), band.offsets(),
                                     frame_index, z_near);
    for (const ImageQuad& q : quads) {
      DrawItem item;
      item.polygon = q.vertices;
      item.label = band_label(band.kind);
      item.instance = band.kind == BandKind::kNonRoadBand
                          ? 0
                          : static_cast<std::uint16_t>(band.band_id);
      item.band_id = band.band_id;
      item.segment = q.segment;
      items.push_back(std::move(item));
      side_orders.push_back(band.side_order);
    }
  }
  std::vector<std::size_t> order(items.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (items[a].segment != items[b].segment) {
      return items[a].segment > items[b].segment;
    }
    const int da = std::abs(side_orders[a]), db = std::abs(side_orders[b]);
    if (da != db) return da > db;
    return side_orders[a] < side_orders[b];
  });
  std::vector<DrawItem> sorted;
  sorted.reserve(items.size());
  for (std::size_t i : order) sorted.push_back(std::move(items[i]));
  return sorted;
}

void paint(LabelMask& mask, const DrawItem& item) {
  scan_polygon(item.polygon, mask.width, mask.height, [&](int y, int x0, int x1) {
    const std::size_t row = static_cast<std::size_t>(y) * mask.width;
    std::fill(mask.class_plane.begin() + row + x0,
              mask.class_plane.begin() + row + x1, item.label);
    std::fill(mask.instance_plane.begin() + row + x0,
              mask.instance_plane.begin() + row + x1, item.instance);
  });
}

void paint_horizon(LabelMask& mask, int horizon_rows) {
  const int rows = std::clamp(horizon_rows, 0, mask.height);
  const std::size_t end = static_cast<std::size_t>(rows) * mask.width;
  std::fill(mask.class_plane.begin(), mask.class_plane.begin() + end, kNonRoad);
  std::fill(mask.instance_plane.begin(), mask.instance_plane.begin() + end, 0);
}

void paint_crop(LabelMask& mask, int crop_rows) {
  const int rows = std::clamp(crop_rows, 0, mask.height);
  const std::size_t begin = static_cast<std::size_t>(mask.height - rows) * mask.width;
  std::fill(mask.class_plane.begin() + begin, mask.class_plane.end(), kUnlabeled);
  std::fill(mask.instance_plane.begin() + begin, mask.instance_plane.end(), 0);
}

LabelMask render_frame(const AnnotationProject& project,
                       const Sequence& sequence, int frame_index,
                       double z_near) {
  if (!project.active()) {
    throw Error(ErrorCode::kRejectedSequence, "project has been rejected");
  }
  check_pairing(project, sequence);
  if (frame_index < 0 || frame_index > sequence.annotatable_end_index) {
    throw Error(ErrorCode::kOutOfRange,
                "frame " + std::to_string(frame_index) +
                    " outside annotatable range [0, " +
                    std::to_string(sequence.annotatable_end_index) + "]");
  }
  LabelMask mask = LabelMask::blank(sequence.camera.width, sequence.camera.height);
  paint_horizon(mask, project.horizon_rows());
  for (const DrawItem& item : draw_list(project, sequence, frame_index, z_near)) {
    paint(mask, item);
  }
  paint_crop(mask, project.crop_top_rows());
  return mask;
}

std::string manifest_json(const AnnotationProject& project,
                          const Sequence& sequence) {
  json bands = json::array();
  for (const auto& b : project.bands()) {
    bands.push_back({{"band_id", b.band_id},
                     {"kind", to_string(b.kind)},
                     {"side_order", b.side_order}});
  }
  json frames = json::array();
  for (int i = 0; i <= sequence.annotatable_end_index; ++i) {
    frames.push_back(sequence.frames[i].name);
  }
  json doc = {{"sequence", sequence.name},
              {"scene_type", to_string(project.scene_type())},
              {"annotatable_range", {0, sequence.annotatable_end_index}},
              {"bands", bands},
              {"frames", frames},
              {"width", sequence.camera.width},
              {"height", sequence.camera.height}};
  return doc.dump(1);
}

ExportResult export_masks(const AnnotationProject& project,
                          const Sequence& sequence,
                          const fs::path& destination, double z_near) {
  ExportResult result;
  if (!project.active()) {
    result.note = "sequence '" + sequence.name + "' is rejected; nothing exported";
    return result;
  }
  check_pairing(project, sequence);
  std::error_code ec;
  fs::create_directories(destination, ec);
  if (ec) {
    throw Error(ErrorCode::kIoError,
                "cannot create " + destination.string() + ": " + ec.message());
  }
  const int count = sequence.annotatable_end_index + 1;
  std::vector<fs::path> files(2 * static_cast<std::size_t>(std::max(count, 0)));
  parallel_for(count, [&](int i) {
    const LabelMask mask = render_frame(project, sequence, i, z_near);
    const std::string& name = sequence.frames[i].name;
    files[2 * i] = destination / (name + "_class.png");
    files[2 * i + 1] = destination / (name + "_instance.png");
    write_png_gray8(files[2 * i], mask.width, mask.height, mask.class_plane);
    write_png_gray16(files[2 * i + 1], mask.width, mask.height, mask.instance_plane);
  });
  const fs::path manifest = destination / "manifest.json";
  write_text(manifest, manifest_json(project, sequence));
  result.files = std::move(files);
  result.files.push_back(manifest);
  return result;
}

MaskSet read_masks(const fs::path& directory, std::span<const std::string> frames) {
  MaskSet set;
  set.frames.assign(frames.begin(), frames.end());
  for (const std::string& name : frames) {
    const GrayImage cls = read_png_gray(directory / (name + "_class.png"));
    LabelMask mask = LabelMask::blank(cls.width, cls.height);
    for (std::size_t i = 0; i < cls.pixels.size(); ++i) {
      mask.class_plane[i] = static_cast<std::uint8_t>(cls.pixels[i]);
    }
    const fs::path inst_path = directory / (name + "_instance.png");
    if (fs::exists(inst_path)) {
      const GrayImage inst = read_png_gray(inst_path);
      if (inst.width != cls.width || inst.height != cls.height) {
        throw Error(ErrorCode::kShapeMismatch,
                    "instance plane size differs for " + name);
      }
      mask.instance_plane = inst.pixels;
    }
    set.masks.push_back(std::move(mask));
  }
  return set;
}

MaskSet read_export(const fs::path& directory) {
  json doc;
  try {
    doc = json::parse(read_text(directory / "manifest.json"));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError,
                (directory / "manifest.json").string() + ": " + e.what());
  }
  std::vector<std::string> frames;
  try {
    frames = doc.at("frames").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, "manifest frames: " + std::string(e.what()));
  }
  MaskSet set = read_masks(directory, frames);
  set.sequence = doc.value("sequence", directory.filename().string());
  set.scene_type = parse_scene_type(doc.value("scene_type", "unset"));
  return set;
}

void write_masks(const fs::path& directory, std::span<const std::string> frames,
                 std::span<const LabelMask> masks) {
  if (frames.size() != masks.size()) {
    throw Error(ErrorCode::kShapeMismatch, "one mask per frame name expected");
  }
  std::error_code ec;
  fs::create_directories(directory, ec);
  if (ec) throw Error(ErrorCode::kIoError, "cannot create " + directory.string());
  for (std::size_t i = 0; i < frames.size(); ++i) {
    write_png_gray8(directory / (frames[i] + "_class.png"), masks[i].width,
                    masks[i].height, masks[i].class_plane);
    write_png_gray16(directory / (frames[i] + "_instance.png"), masks[i].width,
                     masks[i].height, masks[i].instance_plane);
  }
  json doc = {{"sequence", directory.filename().string()},
              {"scene_type", "unset"},
              {"frames", frames}};
  write_text(directory / "manifest.json", doc.dump(1));
}

DensityReport density_stats(std::span<const MaskSet> sequences) {
  DensityReport report;
  std::uint64_t labeled = 0, non_road = 0, road = 0, ego = 0;
  std::vector<int> instances;
  for (const MaskSet& seq : sequences) {
    if (seq.masks.empty()) continue;
    ++report.sequences;
    ++report.scene_types[std::string(to_string(seq.scene_type))];
    std::set<std::uint16_t> ids;
    for (const LabelMask& m : seq.masks) {
      ++report.frames;
      report.pixels += m.size();
      for (std::size_t i = 0; i < m.size(); ++i) {
        switch (m.class_plane[i]) {
          case kNonRoad: ++non_road; break;
          case kRoad: ++road; break;
          case kEgoLane: ++road; ++ego; break;
          default: break;
        }
        if (m.instance_plane[i] != 0) ids.insert(m.instance_plane[i]);
      }
    }
    instances.push_back(static_cast<int>(ids.size()));
  }
  if (report.pixels == 0) {
    throw Error(ErrorCode::kEmptyEvaluation, "no masks to summarize");
  }
  labeled = non_road + road;
  const double total = static_cast<double>(report.pixels);
  report.density = labeled / total;
  report.non_road = non_road / total;
  report.road = road / total;
  report.ego_lane = ego / total;

  std::sort(instances.begin(), instances.end());
  RangeStats& r = report.instances_per_sequence;
  r.min = instances.front();
  r.max = instances.back();
  double sum = 0.0;
  for (int v : instances) sum += v;
  r.mean = sum / instances.size();
  const std::size_t mid = instances.size() / 2;
  r.median = instances.size() % 2 ? instances[mid]
                                  : 0.5 * (instances[mid - 1] + instances[mid]);
  return report;
}

std::string density_report_json(const DensityReport& r) {
  json doc = {{"pixels", r.pixels},
              {"sequences", r.sequences},
              {"frames", r.frames},
              {"annotation_density", r.density},
              {"non_road", r.non_road},
              {"road", r.road},
              {"ego_lane", r.ego_lane},
              {"instances_per_sequence",
               {{"mean", r.instances_per_sequence.mean},
                {"median", r.instances_per_sequence.median},
                {"min", r.instances_per_sequence.min},
                {"max", r.instances_per_sequence.max}}},
              {"scene_types", r.scene_types}};
  return doc.dump(1);
}

}  // namespace lanekit
