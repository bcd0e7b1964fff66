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

#include "lanekit/cli.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "lanekit/annotation.hpp"
#include "lanekit/error.hpp"
#include "lanekit/geometry.hpp"
#include "lanekit/ingest.hpp"
#include "lanekit/metrics.hpp"
#include "lanekit/render.hpp"
#include "lanekit/server.hpp"
#include "lanekit/synthetic.hpp"

namespace lanekit::cli {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr const char* kSequenceSuffix = ".sequence.json";
constexpr const char* kProjectSuffix = ".project.json";

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  out.flush();
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
}

bool ends_with(const std::string& s, std::string_view suffix) {
  return s.size() > suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

// Files given directly, plus files with the suffix inside given directories.
std::vector<fs::path> collect(const std::vector<std::string>& inputs,
                              std::string_view suffix) {
  std::vector<fs::path> files;
  for (const auto& in : inputs) {
    if (fs::is_directory(in)) {
      std::vector<fs::path> found;
      for (const auto& e : fs::directory_iterator(in)) {
        if (ends_with(e.path().filename().string(), suffix)) found.push_back(e.path());
      }
      std::sort(found.begin(), found.end());
      files.insert(files.end(), found.begin(), found.end());
    } else if (fs::exists(in)) {
      files.emplace_back(in);
    } else {
      throw Error(ErrorCode::kIoError, in + " does not exist");
    }
  }
  return files;
}


// A single export directory, or a directory of them.
std::vector<fs::path> export_dirs(const fs::path& root) {
  if (fs::exists(root / "manifest.json")) return {root};
  std::vector<fs::path> dirs;
  if (fs::is_directory(root)) {
    for (const auto& e : fs::directory_iterator(root)) {
      if (e.is_directory() && fs::exists(e.path() / "manifest.json")) {
        dirs.push_back(e.path());
      }
    }
  }
  std::sort(dirs.begin(), dirs.end());
  if (dirs.empty()) throw Error(ErrorCode::kIoError, "no export found in " + root.string());
  return dirs;
}

std::vector<MaskSet> read_exports(const fs::path& root) {
  std::vector<MaskSet> sets;
  for (const auto& d : export_dirs(root)) sets.push_back(read_export(d));
  return sets;
}

// Ground truth paired to predictions. A gt directory without a manifest is
// read using the prediction's frame names.
std::vector<MaskSet> read_paired(const fs::path& root, const std::vector<MaskSet>& pred) {
  std::vector<MaskSet> gt;
  for (const MaskSet& p : pred) {
    fs::path dir = root;
    if (fs::is_directory(root / p.sequence)) dir = root / p.sequence;
    MaskSet g = fs::exists(dir / "manifest.json") ? read_export(dir)
                                                  : read_masks(dir, p.frames);
    if (g.sequence.empty()) g.sequence = p.sequence;
    gt.push_back(std::move(g));
  }
  return gt;
}

std::vector<LabelMask> flatten(const std::vector<MaskSet>& sets,
                               const std::vector<MaskSet>& other) {
  if (sets.size() != other.size()) {
    throw Error(ErrorCode::kSequenceMismatch, "sequence counts differ");
  }
  std::vector<LabelMask> all;
  for (std::size_t s = 0; s < sets.size(); ++s) {
    if (sets[s].frames != other[s].frames) {
      throw Error(ErrorCode::kSequenceMismatch,
                  "frames of '" + sets[s].sequence + "' differ between inputs");
    }
    all.insert(all.end(), sets[s].masks.begin(), sets[s].masks.end());
  }
  return all;
}

json vec_json(const Vec3& v) { return {v.x(), v.y(), v.z()}; }

std::string vec_text(const Vec3& v) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "(%.9f, %.9f, %.9f)", v.x(), v.y(), v.z());
  return buf;
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInsufficientTurning:
    case ErrorCode::kNoForwardMotion:
    case ErrorCode::kDegenerateFrame:
    case ErrorCode::kDegenerateMotion:
      return kExitEstimation;
    case ErrorCode::kIoError:
    case ErrorCode::kParseError:
    case ErrorCode::kVersionMismatch:
    case ErrorCode::kUnknownCameraModel:
      return kExitIo;
    default:
      return kExitUsage;
  }
}

std::atomic<bool> g_interrupted{false};
extern "C" void on_signal(int) { g_interrupted = true; }

struct Options {
  bool json_out = false;
  std::string config_file;
  std::optional<double> lane_width, camera_height, width_step, z_near;

  struct {
    std::string reconstruction, gps, out;
    double min_distance = 1.0, max_length = 200.0, tail = 100.0;
  } ingest;
  struct {
    std::vector<std::string> sequences;
    std::string out, road_frame;
  } estimate;
  struct {
    std::string project, out;
    int frame = 0;
  } render;
  struct {
    std::vector<std::string> projects;
    std::string out;
  } exp;
  struct {
    std::vector<std::string> exports;
  } stats;
  struct {
    std::string pred, gt, task = "ego";
  } metrics;
  struct {
    std::string kind, out, truth_out;
    std::vector<std::string> truth_for;
    synthetic::Params params;
    int width = 640, height = 480;
    double k1 = 0.0, k2 = 0.0, focal = 0.85;
  } synth;
  struct {
    std::string projects, images, host = "127.0.0.1";
    int port = 8080;
  } serve;
};

class Runner {
 public:
  Runner(Options opts, Config config, std::ostream& out, std::ostream& err)
      : o_(std::move(opts)), c_(std::move(config)), out_(out), err_(err) {}

  int ingest() {
    const auto recon = parse_reconstruction(read_file(o_.ingest.reconstruction));
    std::map<std::string, Geotag> gps;
    if (!o_.ingest.gps.empty()) gps = parse_gps_csv(read_file(o_.ingest.gps));
    const FrameSet set = frames_from_reconstruction(recon, gps);
    const auto kept = filter_by_distance(set.frames, o_.ingest.min_distance);
    SplitOptions split;
    split.max_length = o_.ingest.max_length;
    split.tail_length = o_.ingest.tail;
    const SplitResult result = split_sequences(kept, set.camera, split);

    const fs::path dir = out_dir(o_.ingest.out, "sequences");
    json seqs = json::array();
    for (const Sequence& s : result.sequences) {
      const fs::path file = dir / (s.name + kSequenceSuffix);
      write_file(file, save_sequence(s));
      seqs.push_back({{"name", s.name},
                      {"file", file.string()},
                      {"frames", s.frame_count()},
                      {"length", s.length()},
                      {"annotatable_end_index", s.annotatable_end_index}});
    }
    json dropped = json::array();
    for (const auto& w : result.dropped) {
      dropped.push_back({{"piece", w.piece}, {"length", w.length}, {"message", w.message}});
      err_ << "warning: " << w.message << "\n";
    }
    json doc = {{"input_frames", set.frames.size()},
                {"kept_frames", kept.size()},
                {"sequences", seqs},
                {"dropped", dropped}};
    if (o_.json_out) {
      out_ << doc.dump(1) << "\n";
    } else {
      out_ << set.frames.size() << " frames, " << kept.size() << " kept at >= "
           << o_.ingest.min_distance << " m spacing\n";
      for (const auto& s : seqs) {
        out_ << s["name"].get<std::string>() << ": " << s["frames"] << " frames, "
             << s["length"].get<double>() << " m, annotatable to frame "
             << s["annotatable_end_index"] << "\n";
      }
    }
    return kExitOk;
  }

  int estimate() {
    std::vector<std::string> inputs = o_.estimate.sequences;
    if (inputs.empty() && c_.paths.count("sequences")) inputs.push_back(c_.paths["sequences"]);
    if (inputs.empty()) return usage("estimate needs --sequences");
    const fs::path dir = out_dir(o_.estimate.out, "projects");
    std::optional<RoadFrame> reused;
    if (!o_.estimate.road_frame.empty()) {
      reused = load_road_frame(read_file(o_.estimate.road_frame));
    }
    EstimationParams params;
    params.z_near = c_.z_near;

    json results = json::array();
    int code = kExitOk;
    for (const fs::path& file : collect(inputs, kSequenceSuffix)) {
      const Sequence seq = load_sequence(read_file(file));
      json entry = {{"sequence", seq.name}};
      RoadFrame road;
      if (reused) {
        road = *reused;
        entry["reused_road_frame"] = o_.estimate.road_frame;
      } else {
        try {
          const Vec3 n = estimate_normal(seq.frames, params);
          const Vec3 f = estimate_forward(seq.frames, params);
          road = RoadFrame::make(c_.camera_height, n, f);
        } catch (const Error& e) {
          if (exit_code_for(e.code()) != kExitEstimation) throw;
          err_ << seq.name << ": " << e.what() << "\n";
          if (e.code() == ErrorCode::kInsufficientTurning) {
            err_ << "hint: estimate on a sequence with turns from the same camera "
                    "mount and reuse it with --road-frame <file>\n";
          }
          entry["error"] = e.what();
          results.push_back(entry);
          code = kExitEstimation;
          continue;
        }
        json weights = json::array();
        for (const auto& d : motion_derivatives(seq.frames, params)) {
          weights.push_back({{"frame", d.frame},
                             {"turn", d.normal.norm()},
                             {"forward_weight", d.weight}});
        }
        entry["weights"] = weights;
      }
      const fs::path road_file = dir / (seq.name + ".road_frame.json");
      write_file(road_file, save_road_frame(road));
      const fs::path project_file = dir / (seq.name + kProjectSuffix);
      std::error_code ec;
      fs::path ref = fs::relative(fs::absolute(file), fs::absolute(dir), ec);
      if (ec || ref.empty()) ref = fs::absolute(file);
      write_file(project_file,
                 save_project(init_project(seq, road, c_.lane_width, ref.string())));
      entry["road_frame"] = {{"h", road.height},
                             {"n", vec_json(road.normal)},
                             {"f", vec_json(road.forward)},
                             {"r", vec_json(road.across)}};
      entry["road_frame_file"] = road_file.string();
      entry["project"] = project_file.string();
      results.push_back(entry);
      if (!o_.json_out) {
        out_ << seq.name << "\n  n = " << vec_text(road.normal)
             << "\n  f = " << vec_text(road.forward)
             << "\n  r = " << vec_text(road.across) << "\n  h = " << road.height
             << "\n";
        if (entry.contains("weights")) {
          out_ << "  frame  turn         forward_weight\n";
          for (const auto& w : entry["weights"]) {
            char buf[96];
            std::snprintf(buf, sizeof buf, "  %5d  %.6e  %.6f\n", w["frame"].get<int>(),
                          w["turn"].get<double>(), w["forward_weight"].get<double>());
            out_ << buf;
          }
        }
      }
    }
    if (o_.json_out) out_ << json{{"results", results}}.dump(1) << "\n";
    return code;
  }

  int render() {
    const auto [project, sequence] = load_pair(o_.render.project);
    const LabelMask mask = render_frame(project, sequence, o_.render.frame, c_.z_near);
    const fs::path dir = o_.render.out;
    const std::string name = sequence.frames[o_.render.frame].name;
    write_masks(dir, std::vector<std::string>{name}, std::vector<LabelMask>{mask});
    if (o_.json_out) {
      out_ << json{{"frame", name}, {"out", dir.string()}}.dump(1) << "\n";
    } else {
      out_ << "wrote " << (dir / (name + "_class.png")).string() << "\n";
    }
    return kExitOk;
  }

  int export_all() {
    std::vector<std::string> inputs = o_.exp.projects;
    if (inputs.empty() && c_.paths.count("projects")) inputs.push_back(c_.paths["projects"]);
    if (inputs.empty()) return usage("export needs --projects");
    const fs::path root = out_dir(o_.exp.out, "exports");
    json results = json::array();
    for (const fs::path& file : collect(inputs, kProjectSuffix)) {
      const auto [project, sequence] = load_pair(file);
      const ExportResult r = export_masks(project, sequence, root / sequence.name, c_.z_near);
      json entry = {{"sequence", sequence.name}, {"files", r.files.size()}};
      if (!r.note.empty()) {
        entry["note"] = r.note;
        err_ << "note: " << r.note << "\n";
      }
      results.push_back(entry);
      if (!o_.json_out && r.note.empty()) {
        out_ << sequence.name << ": " << r.files.size() << " files\n";
      }
    }
    if (o_.json_out) out_ << json{{"exports", results}}.dump(1) << "\n";
    return kExitOk;
  }

  int stats() {
    std::vector<std::string> inputs = o_.stats.exports;
    if (inputs.empty() && c_.paths.count("exports")) inputs.push_back(c_.paths["exports"]);
    if (inputs.empty()) return usage("stats needs --exports");
    std::vector<MaskSet> sets;
    for (const auto& in : inputs) {
      for (auto& s : read_exports(in)) sets.push_back(std::move(s));
    }
    const DensityReport r = density_stats(sets);
    if (o_.json_out) {
      out_ << density_report_json(r) << "\n";
      return kExitOk;
    }
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "sequences %d  frames %d\n"
                  "annotation density %6.2f%%\n"
                  "  non-road         %6.2f%%\n"
                  "  road             %6.2f%%\n"
                  "    ego lane       %6.2f%%\n"
                  "instances per sequence: mean %.2f median %.1f min %d max %d\n",
                  r.sequences, r.frames, 100 * r.density, 100 * r.non_road,
                  100 * r.road, 100 * r.ego_lane, r.instances_per_sequence.mean,
                  r.instances_per_sequence.median, r.instances_per_sequence.min,
                  r.instances_per_sequence.max);
    out_ << buf;
    for (const auto& [type, n] : r.scene_types) out_ << "  " << type << ": " << n << "\n";
    return kExitOk;
  }

  int metrics(const std::string& mode) {
    if (mode == "agreement") {
      const auto a = read_exports(o_.metrics.pred);
      const auto b = read_paired(o_.metrics.gt, a);
      const AgreementReport r = annotator_agreement(a, b);
      out_ << (o_.json_out ? agreement_report_json(r) + "\n" : agreement_report_table(r));
      return kExitOk;
    }
    const auto pred = read_exports(o_.metrics.pred);
    const auto gt = read_paired(o_.metrics.gt, pred);
    const auto p = flatten(pred, gt);
    const auto g = flatten(gt, pred);
    if (mode == "iou") {
      const ClassMapping m = o_.metrics.task == "road" ? ClassMapping::road_task()
                                                        : ClassMapping::ego_task();
      const SemanticReport r = semantic_iou(p, g, m);
      out_ << (o_.json_out ? semantic_report_json(r, m) + "\n"
                           : semantic_report_table(r, m));
    } else {
      const ApReport r = average_precision(p, g);
      out_ << (o_.json_out ? ap_report_json(r) + "\n" : ap_report_table(r));
    }
    return kExitOk;
  }

  int synth() {
    synthetic::Params& params = o_.synth.params;
    params.kind = synthetic::parse_path_kind(o_.synth.kind);
    const synthetic::Scene scene = synthetic::generate(params);
    CameraModel camera = synthetic::default_camera(o_.synth.width, o_.synth.height);
    camera.normalized_focal = o_.synth.focal;
    camera.k1 = o_.synth.k1;
    camera.k2 = o_.synth.k2;
    camera.validate();

    json doc = {{"kind", synthetic::path_kind_name(params.kind)},
                {"frames", scene.frames.size()}};
    if (!o_.synth.out.empty()) {
      const fs::path file = fs::path(o_.synth.out) / "reconstruction.json";
      write_file(file, serialize_reconstruction(synthetic::to_reconstruction(scene, camera)));
      write_file(fs::path(o_.synth.out) / "truth_road_frame.json",
                 save_road_frame(scene.truth));
      doc["reconstruction"] = file.string();
    }
    if (!o_.synth.truth_for.empty()) {
      if (o_.synth.truth_out.empty()) return usage("--truth-for needs --truth-out");
      std::map<std::string, double> position;
      for (std::size_t i = 0; i < scene.frames.size(); ++i) {
        position[scene.frames[i].name] = scene.path_position[i];
      }
      json truth = json::array();
      for (const fs::path& file : collect(o_.synth.truth_for, kSequenceSuffix)) {
        const Sequence seq = load_sequence(read_file(file));
        truth.push_back(write_truth(scene, seq, position));
      }
      doc["truth"] = truth;
    }
    if (o_.json_out) {
      out_ << doc.dump(1) << "\n";
    } else {
      out_ << doc["kind"].get<std::string>() << ": " << scene.frames.size() << " frames\n";
    }
    return kExitOk;
  }

  int serve() {
    ServerConfig sc;
    sc.projects_dir = !o_.serve.projects.empty() ? o_.serve.projects
                      : c_.paths.count("projects") ? c_.paths["projects"]
                                                   : std::string();
    if (sc.projects_dir.empty()) return usage("serve needs --projects");
    sc.images_dir = o_.serve.images;
    sc.host = o_.serve.host;
    sc.port = o_.serve.port;
    sc.z_near = c_.z_near;
    sc.width_step = c_.width_step;
    AnnotationServer server(sc);
    const int port = server.start();
    out_ << "serving " << server.project_ids().size() << " projects on http://"
         << sc.host << ":" << port << "\n"
         << std::flush;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    while (!g_interrupted) std::this_thread::sleep_for(std::chrono::milliseconds(200));
    server.stop();
    return kExitOk;
  }

 private:
  int usage(const std::string& message) {
    err_ << message << "\n";
    return kExitUsage;
  }

  fs::path out_dir(const std::string& given, const std::string& key) {
    if (!given.empty()) return given;
    const auto it = c_.paths.find(key);
    if (it != c_.paths.end()) return it->second;
    return key;
  }

  std::pair<AnnotationProject, Sequence> load_pair(const fs::path& project_file) {
    AnnotationProject project = load_project(read_file(project_file));
    fs::path ref = project.origin().sequence_ref;
    if (ref.is_relative()) ref = project_file.parent_path() / ref;
    return {std::move(project), load_sequence(read_file(ref))};
  }

  json write_truth(const synthetic::Scene& scene, const Sequence& seq,
                   const std::map<std::string, double>& position) {
    auto pos = [&](const CameraFrame& f) {
      const auto it = position.find(f.name);
      if (it == position.end()) {
        throw Error(ErrorCode::kSequenceMismatch,
                    "frame " + f.name + " is not part of this synthetic scene");
      }
      return it->second;
    };
    const double s_end = pos(seq.frames.back());
    const double half = scene.params.lane_width / 2;
    std::vector<std::string> names;
    std::vector<LabelMask> masks;
    for (int i = 0; i <= seq.annotatable_end_index; ++i) {
      const auto inside = synthetic::analytic_band_mask(
          scene, seq.camera, pos(seq.frames[i]), s_end, half, -half, c_.z_near);
      LabelMask m = LabelMask::blank(seq.camera.width, seq.camera.height);
      for (std::size_t k = 0; k < inside.size(); ++k) {
        m.class_plane[k] = inside[k] ? kEgoLane : kNonRoad;
        m.instance_plane[k] = inside[k] ? 1 : 0;
      }
      names.push_back(seq.frames[i].name);
      masks.push_back(std::move(m));
    }
    const fs::path dir = fs::path(o_.synth.truth_out) / seq.name;
    write_masks(dir, names, masks);
    return {{"sequence", seq.name}, {"frames", names.size()}, {"dir", dir.string()}};
  }

  Options o_;
  Config c_;
  std::ostream& out_;
  std::ostream& err_;
};

}  // namespace

void Config::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0)) {
      throw Error(ErrorCode::kInvalidParams, std::string(name) + " must be positive");
    }
  };
  positive(lane_width, "lane_width");
  positive(camera_height, "camera_height");
  positive(width_step, "width_step");
  positive(z_near, "z_near");
}

Config Config::from_json(std::string_view text) {
  Config c;
  try {
    const json j = json::parse(text.begin(), text.end());
    c.lane_width = j.value("lane_width", c.lane_width);
    c.camera_height = j.value("camera_height", c.camera_height);
    c.width_step = j.value("width_step", c.width_step);
    c.z_near = j.value("z_near", c.z_near);
    if (j.contains("paths")) c.paths = j["paths"].get<std::map<std::string, std::string>>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

std::string Config::to_json() const {
  return json{{"lane_width", lane_width},
              {"camera_height", camera_height},
              {"width_step", width_step},
              {"z_near", z_near},
              {"paths", paths}}
      .dump(1);
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Semi-automated lane annotation toolkit", "lanekit"};
  app.require_subcommand(1);
  app.fallthrough();
  app.add_flag("--json", o.json_out, "Machine-readable output");
  app.add_option("--config", o.config_file, "Config file (JSON)");
  app.add_option("--lane-width", o.lane_width, "Default lane width in meters");
  app.add_option("--camera-height", o.camera_height, "Camera height above the road");
  app.add_option("--width-step", o.width_step, "Width edit step in meters");
  app.add_option("--z-near", o.z_near, "Near clipping distance in meters");

  CLI::App* ingest = app.add_subcommand("ingest", "Reconstruction + GPS to sequences");
  ingest->add_option("--reconstruction", o.ingest.reconstruction)->required();
  ingest->add_option("--gps", o.ingest.gps, "CSV sidecar: name,lat,lon");
  ingest->add_option("--out", o.ingest.out, "Output directory");
  ingest->add_option("--min-distance", o.ingest.min_distance);
  ingest->add_option("--max-length", o.ingest.max_length);
  ingest->add_option("--tail", o.ingest.tail);

  CLI::App* estimate = app.add_subcommand("estimate", "Sequences to RoadFrame and projects");
  estimate->add_option("--sequences", o.estimate.sequences, "Sequence files or directories");
  estimate->add_option("--out", o.estimate.out, "Project directory");
  estimate->add_option("--road-frame", o.estimate.road_frame,
                       "Reuse this RoadFrame instead of estimating");

  CLI::App* render = app.add_subcommand("render", "Render one frame of a project");
  render->add_option("--project", o.render.project)->required();
  render->add_option("--frame", o.render.frame)->required();
  render->add_option("--out", o.render.out)->required();

  CLI::App* exp = app.add_subcommand("export", "Projects to mask directories");
  exp->add_option("--projects", o.exp.projects, "Project files or directories");
  exp->add_option("--out", o.exp.out, "Export root");

  CLI::App* stats = app.add_subcommand("stats", "Label density breakdown");
  stats->add_option("--exports", o.stats.exports, "Export directories");

  CLI::App* metrics = app.add_subcommand("metrics", "Evaluate masks");
  metrics->require_subcommand(1);
  std::vector<CLI::App*> modes;
  for (const char* mode : {"iou", "ap", "agreement"}) {
    CLI::App* m = metrics->add_subcommand(mode);
    const bool agree = std::string(mode) == "agreement";
    m->add_option(agree ? "--a,--pred" : "--pred", o.metrics.pred)->required();
    m->add_option(agree ? "--b,--gt" : "--gt", o.metrics.gt)->required();
    if (std::string(mode) == "iou") {
      m->add_option("--task", o.metrics.task)->check(CLI::IsMember({"road", "ego"}));
    }
    modes.push_back(m);
  }

  CLI::App* synth = app.add_subcommand("synth", "Emit a synthetic scene");
  auto& sp = o.synth.params;
  synth->add_option("kind", o.synth.kind, "straight | arc | s_curve | hill")->required();
  synth->add_option("--out", o.synth.out, "Writes reconstruction.json here");
  synth->add_option("--length", sp.length);
  synth->add_option("--spacing", sp.spacing);
  synth->add_option("--radius", sp.radius);
  synth->add_option("--segment-length", sp.segment_length);
  synth->add_flag("--clockwise", sp.clockwise);
  synth->add_option("--hill-amplitude", sp.hill_amplitude);
  synth->add_option("--hill-wavelength", sp.hill_wavelength);
  synth->add_option("--width", o.synth.width);
  synth->add_option("--height", o.synth.height);
  synth->add_option("--focal", o.synth.focal);
  synth->add_option("--k1", o.synth.k1);
  synth->add_option("--k2", o.synth.k2);
  synth->add_option("--truth-for", o.synth.truth_for,
                    "Write analytic ego-lane masks for these sequences");
  synth->add_option("--truth-out", o.synth.truth_out);

  CLI::App* serve = app.add_subcommand("serve", "Start the annotation service");
  serve->add_option("--projects", o.serve.projects);
  serve->add_option("--images", o.serve.images);
  serve->add_option("--host", o.serve.host);
  serve->add_option("--port", o.serve.port);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    Config config;
    if (!o.config_file.empty()) config = Config::from_json(read_file(o.config_file));
    if (o.lane_width) config.lane_width = *o.lane_width;
    if (o.camera_height) config.camera_height = *o.camera_height;
    if (o.width_step) config.width_step = *o.width_step;
    if (o.z_near) config.z_near = *o.z_near;
    config.validate();
    if (o.lane_width) o.synth.params.lane_width = config.lane_width;
    if (o.camera_height) o.synth.params.camera_height = config.camera_height;

    Runner r(o, config, out, err);
    if (ingest->parsed()) return r.ingest();
    if (estimate->parsed()) return r.estimate();
    if (render->parsed()) return r.render();
    if (exp->parsed()) return r.export_all();
    if (stats->parsed()) return r.stats();
    if (metrics->parsed()) {
      for (CLI::App* m : modes) {
        if (m->parsed()) return r.metrics(m->get_name());
      }
    }
    if (synth->parsed()) return r.synth();
    if (serve->parsed()) return r.serve();
    return kExitUsage;
  } catch (const Error& e) {
    if (o.json_out) {
      out << json{{"error", error_name(e.code())}, {"message", e.what()}}.dump(1) << "\n";
    }
    err << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::filesystem::filesystem_error& e) {
    err << "IoError: " << e.what() << "\n";
    return kExitIo;
  }
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace lanekit::cli
