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

// Semantic and instance evaluation of label masks.
//
// Instance detections carry no confidence, so "AP" here is the
// single-operating-point score P*R at each IoU threshold, micro-averaged over
// the evaluation set and averaged over thresholds 0.50, 0.55, ..., 0.95.

#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lanekit/render.hpp"

namespace lanekit {

// Maps stored class values to evaluation classes; -1 marks "not known".
struct ClassMapping {
  std::array<int, 256> to_eval{};
  std::vector<int> classes;  // evaluation classes to report
  std::map<int, std::string> names;

  // Raw labels; 0 is unknown. Reports the given classes.
  static ClassMapping identity(std::vector<int> classes);
  // non-road vs road, ego folded into road.
  static ClassMapping road_task();
  // non-road vs road vs ego lane.
  static ClassMapping ego_task();
};

struct ClassCounts {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;

  ClassCounts& operator+=(const ClassCounts& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
  bool operator==(const ClassCounts&) const = default;
};

struct ConfusionCounts {
  std::map<int, ClassCounts> per_class;
  std::uint64_t evaluated_pixels = 0;

  ConfusionCounts& operator+=(const ConfusionCounts& o);
  bool operator==(const ConfusionCounts&) const = default;
};

// Pixels where gt is unknown are skipped; with require_both, also pixels
// where pred is unknown. Throws kShapeMismatch.
ConfusionCounts confusion_counts(const LabelMask& pred, const LabelMask& gt,
                                 const ClassMapping& mapping,
                                 bool require_both = false);

struct ClassScores {
  std::map<int, double> per_class;
  double mean = 0.0;
  std::vector<std::string> notes;  // classes left out because 0/0
};

ClassScores iou_from_counts(const ConfusionCounts& counts,
                            const ClassMapping& mapping);
ClassScores f1_score(const ConfusionCounts& counts, const ClassMapping& mapping);

struct SemanticReport {
  ConfusionCounts counts;
  ClassScores iou;
  ClassScores f1;
};

// Throws kShapeMismatch, kEmptyEvaluation when no pixel is evaluable.
SemanticReport semantic_iou(std::span<const LabelMask> pred,
                            std::span<const LabelMask> gt,
                            const ClassMapping& mapping,
                            bool require_both = false);

enum class PixelFilter {
  kAll,
  kJointlyLabeled,  // both class planes known
};

struct InstancePair {
  int pred_id = 0;
  int gt_id = 0;
  double iou = 0.0;
  bool operator==(const InstancePair&) const = default;
};

struct InstanceMatch {
  std::vector<InstancePair> pairs;  // IoU non-increasing
  std::vector<int> unmatched_pred;
  std::vector<int> unmatched_gt;

  std::size_t tp() const { return pairs.size(); }
  std::size_t fp() const { return unmatched_pred.size(); }
  std::size_t fn() const { return unmatched_gt.size(); }
};

// Greedy one-to-one matching by descending IoU; only pairs with IoU >= t are
// kept. Instance id 0 is background. Throws kShapeMismatch.
InstanceMatch match_instances(const LabelMask& pred, const LabelMask& gt,
                              double threshold,
                              PixelFilter filter = PixelFilter::kAll);

struct ThresholdScore {
  double threshold = 0.0;
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  double precision = 0.0;
  double recall = 0.0;
  double score = 0.0;
};

struct ApReport {
  double ap50 = 0.0;
  double ap = 0.0;
  std::vector<ThresholdScore> per_threshold;
};

std::vector<double> coco_thresholds();

ApReport average_precision(std::span<const LabelMask> pred,
                           std::span<const LabelMask> gt,
                           PixelFilter filter = PixelFilter::kAll,
                           std::span<const double> thresholds = {});

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // population std over sequences
};

struct AgreementReport {
  std::uint64_t pixels = 0;
  std::uint64_t labeled_by_any = 0;
  std::uint64_t labeled_by_both = 0;
  double any_fraction = 0.0;
  double joint_fraction = 0.0;  // of pixels labeled by either annotator

  // Empty when no pixel is labeled by both (see notes).
  std::optional<SemanticReport> road;
  std::optional<SemanticReport> ego;
  ApReport instances;

  // Per-sequence spread of each headline number.
  std::map<std::string, MeanStd> per_sequence;
  std::vector<std::string> notes;
};

// A is treated as the prediction, B as ground truth. Throws
// kSequenceMismatch when the two sides do not cover the same frames.
AgreementReport annotator_agreement(std::span<const MaskSet> a,
                                    std::span<const MaskSet> b);

std::string semantic_report_json(const SemanticReport& report,
                                 const ClassMapping& mapping);
std::string ap_report_json(const ApReport& report);
std::string agreement_report_json(const AgreementReport& report);

std::string semantic_report_table(const SemanticReport& report,
                                  const ClassMapping& mapping);
std::string ap_report_table(const ApReport& report);
std::string agreement_report_table(const AgreementReport& report);

}  // namespace lanekit
