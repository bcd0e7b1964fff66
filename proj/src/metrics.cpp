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

#include "lanekit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "lanekit/error.hpp"

namespace lanekit {
namespace {

using nlohmann::json;

void check_shape(const LabelMask& a, const LabelMask& b) {
  if (a.width != b.width || a.height != b.height ||
      a.class_plane.size() != b.class_plane.size()) {
    throw Error(ErrorCode::kShapeMismatch,
                std::to_string(a.width) + "x" + std::to_string(a.height) +
                    " vs " + std::to_string(b.width) + "x" +
                    std::to_string(b.height));
  }
}

bool evaluable(const LabelMask& pred, const LabelMask& gt, std::size_t i,
               PixelFilter filter) {
  return filter == PixelFilter::kAll ||
         (pred.class_plane[i] != kUnlabeled && gt.class_plane[i] != kUnlabeled);
}

// Per-image overlap table: pixel areas per id and intersections per pair.
struct Overlaps {
  std::map<int, std::uint64_t> pred_area;
  std::map<int, std::uint64_t> gt_area;
  std::vector<InstancePair> candidates;  // sorted for greedy matching
};

Overlaps overlaps(const LabelMask& pred, const LabelMask& gt, PixelFilter filter) {
  check_shape(pred, gt);
  if (pred.instance_plane.size() != pred.size() ||
      gt.instance_plane.size() != gt.size()) {
    throw Error(ErrorCode::kShapeMismatch, "instance plane size differs");
  }
  Overlaps o;
  std::unordered_map<std::uint32_t, std::uint64_t> inter;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (!evaluable(pred, gt, i, filter)) continue;
    const int p = pred.instance_plane[i];
    const int g = gt.instance_plane[i];
    if (p) ++o.pred_area[p];
    if (g) ++o.gt_area[g];
    if (p && g) ++inter[(static_cast<std::uint32_t>(p) << 16) | g];
  }
  for (const auto& [key, count] : inter) {
    const int p = static_cast<int>(key >> 16);
    const int g = static_cast<int>(key & 0xffff);
    const double uni =
        static_cast<double>(o.pred_area[p] + o.gt_area[g] - count);
    o.candidates.push_back({p, g, count / uni});
  }
  std::sort(o.candidates.begin(), o.candidates.end(),
            [](const InstancePair& a, const InstancePair& b) {
              if (a.iou != b.iou) return a.iou > b.iou;
              if (a.pred_id != b.pred_id) return a.pred_id < b.pred_id;
              return a.gt_id < b.gt_id;
            });
  return o;
}

InstanceMatch match(const Overlaps& o, double threshold) {
  InstanceMatch m;
  std::map<int, bool> pred_used, gt_used;
  for (const InstancePair& c : o.candidates) {
    // Candidates are sorted, so everything after the first miss misses too.
    if (c.iou < threshold) break;
    if (pred_used[c.pred_id] || gt_used[c.gt_id]) continue;
    pred_used[c.pred_id] = gt_used[c.gt_id] = true;
    m.pairs.push_back(c);
  }
  for (const auto& [id, area] : o.pred_area) {
    if (!pred_used[id]) m.unmatched_pred.push_back(id);
  }
  for (const auto& [id, area] : o.gt_area) {
    if (!gt_used[id]) m.unmatched_gt.push_back(id);
  }
  return m;
}

ClassScores scores(const ConfusionCounts& counts, const ClassMapping& mapping,
                   bool f1) {
  ClassScores s;
  double sum = 0.0;
  for (int c : mapping.classes) {
    const auto it = counts.per_class.find(c);
    const ClassCounts k = it == counts.per_class.end() ? ClassCounts{} : it->second;
    const std::uint64_t denom = (f1 ? 2 * k.tp : k.tp) + k.fp + k.fn;
    if (denom == 0) {
      const auto name = mapping.names.find(c);
      s.notes.push_back(
          "class " + (name == mapping.names.end() ? std::to_string(c) : name->second) +
          " absent from both prediction and ground truth; omitted");
      continue;
    }
    const double v = static_cast<double>(f1 ? 2 * k.tp : k.tp) / denom;
    s.per_class[c] = v;
    sum += v;
  }
  if (!s.per_class.empty()) s.mean = sum / s.per_class.size();
  return s;
}

double score_at(std::uint64_t tp, std::uint64_t fp, std::uint64_t fn,
                ThresholdScore& out) {
  out.tp = tp;
  out.fp = fp;
  out.fn = fn;
  out.precision = tp + fp ? static_cast<double>(tp) / (tp + fp) : 0.0;
  out.recall = tp + fn ? static_cast<double>(tp) / (tp + fn) : 0.0;
  // Nothing to find and nothing found counts as perfect.
  out.score = tp + fp + fn == 0 ? 1.0 : out.precision * out.recall;
  return out.score;
}

MeanStd mean_std(const std::vector<double>& v) {
  MeanStd r;
  if (v.empty()) return r;
  for (double x : v) r.mean += x;
  r.mean /= v.size();
  double ss = 0.0;
  for (double x : v) ss += (x - r.mean) * (x - r.mean);
  r.std = std::sqrt(ss / v.size());
  return r;
}

std::string class_name(const ClassMapping& m, int c) {
  const auto it = m.names.find(c);
  return it == m.names.end() ? std::to_string(c) : it->second;
}

json semantic_json(const SemanticReport& r, const ClassMapping& m) {
  json per_class = json::object();
  for (int c : m.classes) {
    const auto k = r.counts.per_class.count(c) ? r.counts.per_class.at(c) : ClassCounts{};
    json entry = {{"tp", k.tp}, {"fp", k.fp}, {"fn", k.fn}};
    if (r.iou.per_class.count(c)) entry["iou"] = r.iou.per_class.at(c);
    if (r.f1.per_class.count(c)) entry["f1"] = r.f1.per_class.at(c);
    per_class[class_name(m, c)] = entry;
  }
  json notes = r.iou.notes;
  return {{"evaluated_pixels", r.counts.evaluated_pixels},
          {"classes", per_class},
          {"mean_iou", r.iou.mean},
          {"mean_f1", r.f1.mean},
          {"notes", notes}};
}

json ap_json(const ApReport& r) {
  json per = json::array();
  for (const auto& t : r.per_threshold) {
    per.push_back({{"threshold", t.threshold},
                   {"tp", t.tp},
                   {"fp", t.fp},
                   {"fn", t.fn},
                   {"precision", t.precision},
                   {"recall", t.recall},
                   {"score", t.score}});
  }
  return {{"ap50", r.ap50}, {"ap", r.ap}, {"per_threshold", per}};
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

}  // namespace

ClassMapping ClassMapping::identity(std::vector<int> classes) {
  ClassMapping m;
  for (int i = 0; i < 256; ++i) m.to_eval[i] = i == 0 ? -1 : i;
  m.classes = std::move(classes);
  return m;
}

ClassMapping ClassMapping::road_task() {
  ClassMapping m = identity({kNonRoad, kRoad});
  m.to_eval[kEgoLane] = kRoad;
  m.names = {{kNonRoad, "non_road"}, {kRoad, "road"}};
  return m;
}

ClassMapping ClassMapping::ego_task() {
  ClassMapping m = identity({kNonRoad, kRoad, kEgoLane});
  m.names = {{kNonRoad, "non_road"}, {kRoad, "road"}, {kEgoLane, "ego_lane"}};
  return m;
}

ConfusionCounts& ConfusionCounts::operator+=(const ConfusionCounts& o) {
  for (const auto& [c, k] : o.per_class) per_class[c] += k;
  evaluated_pixels += o.evaluated_pixels;
  return *this;
}

ConfusionCounts confusion_counts(const LabelMask& pred, const LabelMask& gt,
                                 const ClassMapping& mapping, bool require_both) {
  check_shape(pred, gt);
  // Joint histogram of (pred, gt) evaluation classes, then per-class tallies.
  std::map<std::pair<int, int>, std::uint64_t> joint;
  ConfusionCounts counts;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    const int g = mapping.to_eval[gt.class_plane[i]];
    if (g < 0) continue;
    const int p = mapping.to_eval[pred.class_plane[i]];
    if (require_both && p < 0) continue;
    ++joint[{p, g}];
    ++counts.evaluated_pixels;
  }
  for (int c : mapping.classes) counts.per_class[c];
  for (const auto& [pg, n] : joint) {
    const auto [p, g] = pg;
    for (int c : mapping.classes) {
      ClassCounts& k = counts.per_class[c];
      if (p == c && g == c) k.tp += n;
      else if (p == c) k.fp += n;
      else if (g == c) k.fn += n;
    }
  }
  return counts;
}

ClassScores iou_from_counts(const ConfusionCounts& counts,
                            const ClassMapping& mapping) {
  return scores(counts, mapping, false);
}

ClassScores f1_score(const ConfusionCounts& counts, const ClassMapping& mapping) {
  return scores(counts, mapping, true);
}

SemanticReport semantic_iou(std::span<const LabelMask> pred,
                            std::span<const LabelMask> gt,
                            const ClassMapping& mapping, bool require_both) {
  if (pred.size() != gt.size()) {
    throw Error(ErrorCode::kShapeMismatch,
                std::to_string(pred.size()) + " predicted masks vs " +
                    std::to_string(gt.size()) + " ground truth masks");
  }
  SemanticReport r;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    r.counts += confusion_counts(pred[i], gt[i], mapping, require_both);
  }
  if (r.counts.evaluated_pixels == 0) {
    throw Error(ErrorCode::kEmptyEvaluation, "no labeled pixel to evaluate");
  }
  r.iou = iou_from_counts(r.counts, mapping);
  r.f1 = f1_score(r.counts, mapping);
  return r;
}

InstanceMatch match_instances(const LabelMask& pred, const LabelMask& gt,
                              double threshold, PixelFilter filter) {
  return match(overlaps(pred, gt, filter), threshold);
}

std::vector<double> coco_thresholds() {
  std::vector<double> t;
  for (int k = 0; k < 10; ++k) t.push_back((50 + 5 * k) / 100.0);
  return t;
}

ApReport average_precision(std::span<const LabelMask> pred,
                           std::span<const LabelMask> gt, PixelFilter filter,
                           std::span<const double> thresholds) {
  if (pred.size() != gt.size()) {
    throw Error(ErrorCode::kShapeMismatch, "prediction and ground truth counts differ");
  }
  const std::vector<double> coco = coco_thresholds();
  if (thresholds.empty()) thresholds = coco;

  std::vector<Overlaps> tables;
  tables.reserve(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    tables.push_back(overlaps(pred[i], gt[i], filter));
  }
  ApReport r;
  double sum = 0.0;
  for (double t : thresholds) {
    std::uint64_t tp = 0, fp = 0, fn = 0;
    for (const Overlaps& o : tables) {
      const InstanceMatch m = match(o, t);
      tp += m.tp();
      fp += m.fp();
      fn += m.fn();
    }
    ThresholdScore s;
    s.threshold = t;
    sum += score_at(tp, fp, fn, s);
    if (t == 0.5) r.ap50 = s.score;
    r.per_threshold.push_back(s);
  }
  r.ap = sum / thresholds.size();
  return r;
}

AgreementReport annotator_agreement(std::span<const MaskSet> a,
                                    std::span<const MaskSet> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::kSequenceMismatch,
                std::to_string(a.size()) + " vs " + std::to_string(b.size()) +
                    " sequences");
  }
  AgreementReport r;
  std::vector<LabelMask> all_a, all_b;
  std::map<std::string, std::vector<double>> per_seq;
  for (std::size_t s = 0; s < a.size(); ++s) {
    const MaskSet& sa = a[s];
    const MaskSet& sb = b[s];
    if (sa.sequence != sb.sequence || sa.frames != sb.frames ||
        sa.masks.size() != sb.masks.size()) {
      throw Error(ErrorCode::kSequenceMismatch,
                  "'" + sa.sequence + "' and '" + sb.sequence +
                      "' do not cover the same frames");
    }
    std::uint64_t pixels = 0, any = 0, both = 0;
    for (std::size_t f = 0; f < sa.masks.size(); ++f) {
      const LabelMask& ma = sa.masks[f];
      const LabelMask& mb = sb.masks[f];
      check_shape(ma, mb);
      for (std::size_t i = 0; i < ma.size(); ++i) {
        const bool la = ma.class_plane[i] != kUnlabeled;
        const bool lb = mb.class_plane[i] != kUnlabeled;
        any += la || lb;
        both += la && lb;
      }
      pixels += ma.size();
      all_a.push_back(ma);
      all_b.push_back(mb);
    }
    r.pixels += pixels;
    r.labeled_by_any += any;
    r.labeled_by_both += both;
    if (any) per_seq["joint_fraction"].push_back(static_cast<double>(both) / any);
    if (both) {
      per_seq["road_miou"].push_back(
          semantic_iou(sa.masks, sb.masks, ClassMapping::road_task(), true).iou.mean);
      per_seq["ego_miou"].push_back(
          semantic_iou(sa.masks, sb.masks, ClassMapping::ego_task(), true).iou.mean);
    }
    const ApReport ap = average_precision(sa.masks, sb.masks, PixelFilter::kJointlyLabeled);
    per_seq["ap"].push_back(ap.ap);
    per_seq["ap50"].push_back(ap.ap50);
  }
  if (r.pixels) r.any_fraction = static_cast<double>(r.labeled_by_any) / r.pixels;
  if (r.labeled_by_any) {
    r.joint_fraction = static_cast<double>(r.labeled_by_both) / r.labeled_by_any;
  }
  if (r.labeled_by_both) {
    r.road = semantic_iou(all_a, all_b, ClassMapping::road_task(), true);
    r.ego = semantic_iou(all_a, all_b, ClassMapping::ego_task(), true);
  } else {
    r.notes.push_back(std::string(error_name(ErrorCode::kEmptyEvaluation)) +
                      ": no pixel is labeled by both annotators; IoU undefined");
  }
  r.instances = average_precision(all_a, all_b, PixelFilter::kJointlyLabeled);
  for (const auto& [name, values] : per_seq) r.per_sequence[name] = mean_std(values);
  return r;
}

std::string semantic_report_json(const SemanticReport& report,
                                 const ClassMapping& mapping) {
  return semantic_json(report, mapping).dump(1);
}

std::string ap_report_json(const ApReport& report) { return ap_json(report).dump(1); }

std::string agreement_report_json(const AgreementReport& r) {
  json per = json::object();
  for (const auto& [name, ms] : r.per_sequence) {
    per[name] = {{"mean", ms.mean}, {"std", ms.std}};
  }
  json doc = {{"pixels", r.pixels},
              {"labeled_by_any", r.labeled_by_any},
              {"labeled_by_both", r.labeled_by_both},
              {"any_fraction", r.any_fraction},
              {"joint_fraction", r.joint_fraction},
              {"road", nullptr},
              {"ego", nullptr},
              {"instances", ap_json(r.instances)},
              {"per_sequence", per},
              {"notes", r.notes}};
  if (r.road) doc["road"] = semantic_json(*r.road, ClassMapping::road_task());
  if (r.ego) doc["ego"] = semantic_json(*r.ego, ClassMapping::ego_task());
  return doc.dump(1);
}

std::string semantic_report_table(const SemanticReport& r,
                                  const ClassMapping& m) {
  std::ostringstream out;
  out << "class        IoU      F1\n";
  for (int c : m.classes) {
    std::string name = class_name(m, c);
    name.resize(10, ' ');
    out << name << "  ";
    if (r.iou.per_class.count(c)) {
      out << fmt("%7.4f", r.iou.per_class.at(c)) << "  "
          << fmt("%7.4f", r.f1.per_class.at(c)) << "\n";
    } else {
      out << "      -        -\n";
    }
  }
  out << "mean        " << fmt("%7.4f", r.iou.mean) << "  " << fmt("%7.4f", r.f1.mean)
      << "\n";
  for (const auto& n : r.iou.notes) out << "note: " << n << "\n";
  return out.str();
}

std::string ap_report_table(const ApReport& r) {
  std::ostringstream out;
  out << "t      TP      FP      FN   score\n";
  for (const auto& t : r.per_threshold) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "%.2f %7llu %7llu %7llu  %.4f\n", t.threshold,
                  static_cast<unsigned long long>(t.tp),
                  static_cast<unsigned long long>(t.fp),
                  static_cast<unsigned long long>(t.fn), t.score);
    out << buf;
  }
  out << "AP@50 " << fmt("%.4f", r.ap50) << "  AP " << fmt("%.4f", r.ap) << "\n";
  return out.str();
}

std::string agreement_report_table(const AgreementReport& r) {
  std::ostringstream out;
  out << "labeled by either  " << fmt("%.2f%%", 100.0 * r.any_fraction) << "\n";
  out << "labeled by both    " << fmt("%.2f%%", 100.0 * r.joint_fraction)
      << " of those\n";
  if (r.road) out << "road mIoU          " << fmt("%.4f", r.road->iou.mean) << "\n";
  if (r.ego) out << "ego mIoU           " << fmt("%.4f", r.ego->iou.mean) << "\n";
  out << "AP@50              " << fmt("%.4f", r.instances.ap50) << "\n";
  out << "AP                 " << fmt("%.4f", r.instances.ap) << "\n";
  for (const auto& [name, ms] : r.per_sequence) {
    out << "std " << name << " " << fmt("%.4f", ms.std) << "\n";
  }
  for (const auto& n : r.notes) out << "note: " << n << "\n";
  return out.str();
}

}  // namespace lanekit
