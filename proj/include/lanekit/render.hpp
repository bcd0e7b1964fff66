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

// Label masks from annotation projects, and their on-disk export format.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "lanekit/annotation.hpp"
#include "lanekit/geometry.hpp"
#include "lanekit/ingest.hpp"

namespace lanekit {

enum LabelClass : std::uint8_t {
  kUnlabeled = 0,
  kNonRoad = 1,
  kRoad = 2,
  kEgoLane = 3,
};

struct LabelMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> class_plane;
  std::vector<std::uint16_t> instance_plane;

  static LabelMask blank(int width, int height);
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * width + x;
  }
  std::size_t size() const { return class_plane.size(); }

  bool operator==(const LabelMask&) const = default;
};

// One polygon to paint, with the labels it writes.
struct DrawItem {
  Polygon2 polygon;
  std::uint8_t label = kUnlabeled;
  std::uint16_t instance = 0;
  int band_id = 0;
  int segment = 0;
};

std::uint8_t band_label(BandKind kind);

// Band polygons for a frame in paint order: far segments first; within a
// segment, outermost bands first and the ego lane last.
std::vector<DrawItem> draw_list(const AnnotationProject& project,
                                const Sequence& sequence, int frame_index,
                                double z_near = 0.1);

void paint(LabelMask& mask, const DrawItem& item);
void paint_horizon(LabelMask& mask, int horizon_rows);
void paint_crop(LabelMask& mask, int crop_rows);

// Horizon rows as non-road, then the draw list, then bottom crop rows as
// unlabeled. Throws kOutOfRange past the annotatable range and
// kRejectedSequence for rejected projects.
LabelMask render_frame(const AnnotationProject& project,
                       const Sequence& sequence, int frame_index,
                       double z_near = 0.1);

struct ExportResult {
  std::vector<std::filesystem::path> files;
  std::string note;
};

std::string manifest_json(const AnnotationProject& project,
                          const Sequence& sequence);

// Writes <frame>_class.png (8-bit) and <frame>_instance.png (16-bit) for
// every annotatable frame plus manifest.json. Rejected projects write
// nothing. Throws kIoError.
ExportResult export_masks(const AnnotationProject& project,
                          const Sequence& sequence,
                          const std::filesystem::path& destination,
                          double z_near = 0.1);

struct MaskSet {
  std::string sequence;
  SceneType scene_type = SceneType::kUnset;
  std::vector<std::string> frames;
  std::vector<LabelMask> masks;
};

// Reads a directory written by export_masks.
MaskSet read_export(const std::filesystem::path& directory);
// Reads <frame>_class.png and, when present, <frame>_instance.png.
MaskSet read_masks(const std::filesystem::path& directory,
                   std::span<const std::string> frames);
void write_masks(const std::filesystem::path& directory,
                 std::span<const std::string> frames,
                 std::span<const LabelMask> masks);

struct RangeStats {
  double mean = 0.0;
  double median = 0.0;
  int min = 0;
  int max = 0;
};

struct DensityReport {
  std::uint64_t pixels = 0;
  double density = 0.0;   // labeled fraction
  double non_road = 0.0;
  double road = 0.0;      // road including ego lane
  double ego_lane = 0.0;
  RangeStats instances_per_sequence;
  std::map<std::string, int> scene_types;
  int sequences = 0;
  int frames = 0;
};

// Throws kEmptyEvaluation without any mask.
DensityReport density_stats(std::span<const MaskSet> sequences);
std::string density_report_json(const DensityReport& report);

}  // namespace lanekit
