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

#include "lanekit/server.hpp"

#include <algorithm>
#include <condition_variable>
#include <fstream>
#include <map>
#include <mutex>
#include <shared_mutex>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "lanekit/error.hpp"

namespace lanekit {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr const char* kProjectSuffix = ".project.json";

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Write-then-rename so a crash never leaves a truncated project file.
void write_file_atomic(const fs::path& path, const std::string& text) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << text;
    out.flush();
    if (!out) throw Error(ErrorCode::kIoError, "cannot write " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::kIoError, "cannot replace " + path.string());
}

std::string content_type_for(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
  if (ext == ".png") return "image/png";
  if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
  return "application/octet-stream";
}

json overlay_doc(const AnnotationProject& project, const Sequence& sequence,
                 int frame, double z_near) {
  json doc = {{"frame", frame},
              {"crop_top_rows", project.crop_top_rows()},
              {"horizon_rows", project.horizon_rows()},
              {"status", to_string(project.status())},
              {"bands", json::array()}};
  if (frame > sequence.annotatable_end_index) {
    doc["note"] = "frame " + std::to_string(frame) +
                  " is past the annotatable range [0, " +
                  std::to_string(sequence.annotatable_end_index) + "]";
    return doc;
  }
  for (const LaneBand& band : project.bands()) {
    json quads = json::array();
    for (const ImageQuad& q : lane_polygons(sequence.frames, sequence.camera,
                                            project.road(), band.offsets(),
                                            frame, z_near)) {
      json poly = json::array();
      for (const Pixel& p : q.vertices) poly.push_back({p.u, p.v});
      quads.push_back(std::move(poly));
    }
    doc["bands"].push_back({{"band_id", band.band_id},
                            {"kind", to_string(band.kind)},
                            {"quads", std::move(quads)}});
  }
  return doc;
}

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message) {
  send_json(res, status, {{"error", message}});
}

int status_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::kIoError: return 500;
    default: return 422;
  }
}

}  // namespace

std::string overlay_json(const AnnotationProject& project,
                         const Sequence& sequence, int frame_index,
                         double z_near) {
  if (frame_index < 0 || frame_index >= sequence.frame_count()) {
    throw Error(ErrorCode::kOutOfRange,
                "frame " + std::to_string(frame_index) + " does not exist");
  }
  return overlay_doc(project, sequence, frame_index, z_near).dump();
}

struct Session {
  std::string id;
  fs::path project_path;
  fs::path sequence_path;
  Sequence sequence;

  std::mutex writer;             // held for a whole write request
  mutable std::shared_mutex mu;  // guards the fields below
  AnnotationProject project;
  long revision = 0;
  bool dirty = false;
  int since_save = 0;

  // Caller holds mu (shared or unique).
  void save_locked() {
    write_file_atomic(project_path, save_project(project));
  }
};

struct AnnotationServer::Impl {
  ServerConfig config;
  std::map<std::string, std::unique_ptr<Session>> sessions;
  httplib::Server http;
  std::thread serve_thread;
  std::thread autosave_thread;
  std::mutex stop_mu;
  std::condition_variable stop_cv;
  bool stopping = false;
  bool started = false;

  explicit Impl(ServerConfig c) : config(std::move(c)) {
    load_sessions();
    routes();
  }

  void load_sessions() {
    std::error_code ec;
    if (!fs::is_directory(config.projects_dir, ec)) {
      throw Error(ErrorCode::kIoError,
                  "projects directory " + config.projects_dir.string() +
                      " is not readable");
    }
    for (const auto& entry : fs::directory_iterator(config.projects_dir)) {
      const std::string file = entry.path().filename().string();
      const std::string suffix = kProjectSuffix;
      if (file.size() <= suffix.size() ||
          file.compare(file.size() - suffix.size(), suffix.size(), suffix) != 0) {
        continue;
      }
      auto s = std::make_unique<Session>();
      s->id = file.substr(0, file.size() - suffix.size());
      s->project_path = entry.path();
      s->project = load_project(read_file(s->project_path));
      fs::path ref = s->project.origin().sequence_ref;
      if (ref.is_relative()) ref = config.projects_dir / ref;
      s->sequence_path = ref;
      s->sequence = load_sequence(read_file(ref));
      if (s->sequence.frame_count() != s->project.frame_count()) {
        throw Error(ErrorCode::kSequenceMismatch,
                    "project " + s->id + " does not match " + ref.string());
      }
      sessions.emplace(s->id, std::move(s));
    }
  }

  Session* find(const std::string& id) {
    const auto it = sessions.find(id);
    return it == sessions.end() ? nullptr : it->second.get();
  }

  // Parses the {i} path segment; -1 when it names no frame.
  static int frame_of(const Session& s, const std::string& text) {
    try {
      const long v = std::stol(text);
      return v >= 0 && v < s.sequence.frame_count() ? static_cast<int>(v) : -1;
    } catch (const std::exception&) {
      return -1;
    }
  }

  json project_doc(const Session& s) const {
    json doc = json::parse(save_project(s.project));
    doc["id"] = s.id;
    doc["revision"] = s.revision;
    doc["dirty"] = s.dirty;
    doc["width_step"] = config.width_step;
    doc["sequence"] = {{"name", s.sequence.name},
                       {"frame_count", s.sequence.frame_count()},
                       {"annotatable_end_index", s.sequence.annotatable_end_index},
                       {"length", s.sequence.length()},
                       {"width", s.sequence.camera.width},
                       {"height", s.sequence.camera.height}};
    return doc;
  }

  // Runs a mutation under the project's writer slot; on any refusal the
  // response is filled here and fn never runs.
  template <class Fn>
  void write_request(const httplib::Request& req, httplib::Response& res, Fn fn) {
    Session* s = find(req.matches[1]);
    if (!s) return send_error(res, 404, "unknown project");
    std::unique_lock writer(s->writer, std::try_to_lock);
    if (!writer.owns_lock()) {
      return send_error(res, 409, "another edit to this project is in flight");
    }
    json body = json::object();
    if (!req.body.empty()) {
      try {
        body = json::parse(req.body);
      } catch (const json::exception& e) {
        return send_error(res, 422, std::string("ParseError: ") + e.what());
      }
      if (!body.is_object()) return send_error(res, 422, "ParseError: body must be an object");
    }
    if (body.contains("base_revision")) {
      std::shared_lock lock(s->mu);
      if (!body["base_revision"].is_number_integer() ||
          body["base_revision"].get<long>() != s->revision) {
        return send_error(res, 409, "stale base_revision; current is " +
                                        std::to_string(s->revision));
      }
    }
    body.erase("base_revision");
    try {
      fn(*s, body);
    } catch (const Error& e) {
      send_error(res, status_for(e), e.what());
    }
  }

  // Caller holds the writer slot.
  void apply_command(Session& s, const EditCommand& cmd) {
    std::unique_lock lock(s.mu);
    s.project.apply(cmd);
    ++s.revision;
    s.dirty = true;
    if (++s.since_save >= config.autosave_every) {
      s.save_locked();
      s.dirty = false;
      s.since_save = 0;
    }
  }

  json overlay_after_write(Session& s, int frame) {
    std::shared_lock lock(s.mu);
    json doc = overlay_doc(s.project, s.sequence, frame, config.z_near);
    doc["revision"] = s.revision;
    return doc;
  }

  int requested_frame(const httplib::Request& req, const json& body, Session& s) {
    std::string text;
    if (req.has_param("frame")) text = req.get_param_value("frame");
    else if (body.contains("frame") && body["frame"].is_number_integer())
      text = std::to_string(body["frame"].get<long>());
    else return 0;
    return frame_of(s, text);
  }

  void routes() {
    http.Get("/sequences", [this](const httplib::Request&, httplib::Response& res) {
      json list = json::array();
      for (const auto& [id, s] : sessions) {
        std::shared_lock lock(s->mu);
        list.push_back({{"id", id},
                        {"sequence", s->sequence.name},
                        {"frame_count", s->sequence.frame_count()},
                        {"annotatable_end_index", s->sequence.annotatable_end_index},
                        {"status", to_string(s->project.status())},
                        {"scene_type", to_string(s->project.scene_type())}});
      }
      send_json(res, 200, list);
    });

    http.Get(R"(/projects/([^/]+))", [this](const httplib::Request& req,
                                            httplib::Response& res) {
      Session* s = find(req.matches[1]);
      if (!s) return send_error(res, 404, "unknown project");
      std::shared_lock lock(s->mu);
      send_json(res, 200, project_doc(*s));
    });

    http.Get(R"(/projects/([^/]+)/frames/([^/]+)/overlay)",
             [this](const httplib::Request& req, httplib::Response& res) {
               Session* s = find(req.matches[1]);
               if (!s) return send_error(res, 404, "unknown project");
               const int frame = frame_of(*s, req.matches[2]);
               if (frame < 0) return send_error(res, 404, "unknown frame");
               std::shared_lock lock(s->mu);
               json doc = overlay_doc(s->project, s->sequence, frame, config.z_near);
               doc["revision"] = s->revision;
               send_json(res, 200, doc);
             });

    http.Get(R"(/projects/([^/]+)/frames/([^/]+)/image)",
             [this](const httplib::Request& req, httplib::Response& res) {
               Session* s = find(req.matches[1]);
               if (!s) return send_error(res, 404, "unknown project");
               const int frame = frame_of(*s, req.matches[2]);
               if (frame < 0) return send_error(res, 404, "unknown frame");
               fs::path ref = s->sequence.frames[frame].image_ref;
               if (ref.empty()) return send_error(res, 404, "frame has no image");
               if (ref.is_relative()) {
                 ref = (config.images_dir.empty() ? s->sequence_path.parent_path()
                                                  : config.images_dir) / ref;
               }
               std::string bytes;
               try {
                 bytes = read_file(ref);
               } catch (const Error&) {
                 return send_error(res, 404, "image not found");
               }
               res.status = 200;
               res.set_content(std::move(bytes), content_type_for(ref));
             });

    http.Post(R"(/projects/([^/]+)/edits)",
              [this](const httplib::Request& req, httplib::Response& res) {
                write_request(req, res, [&](Session& s, json body) {
                  const int frame = requested_frame(req, body, s);
                  if (frame < 0) return send_error(res, 404, "unknown frame");
                  body.erase("frame");
                  if (!body.contains("timestamp")) body["timestamp"] = now_ms();
                  const EditCommand cmd = edit_from_json(body.dump());
                  apply_command(s, cmd);
                  send_json(res, 200, overlay_after_write(s, frame));
                });
              });

    http.Post(R"(/projects/([^/]+)/reject)",
              [this](const httplib::Request& req, httplib::Response& res) {
                write_request(req, res, [&](Session& s, const json& body) {
                  const int frame = requested_frame(req, body, s);
                  if (frame < 0) return send_error(res, 404, "unknown frame");
                  apply_command(s, {edit::Reject{}, now_ms()});
                  send_json(res, 200, overlay_after_write(s, frame));
                });
              });

    http.Post(R"(/projects/([^/]+)/scene-type)",
              [this](const httplib::Request& req, httplib::Response& res) {
                write_request(req, res, [&](Session& s, const json& body) {
                  if (!body.contains("scene_type") || !body["scene_type"].is_string()) {
                    return send_error(res, 422, "ParseError: scene_type missing");
                  }
                  const SceneType type =
                      parse_scene_type(body["scene_type"].get<std::string>());
                  apply_command(s, {edit::SetSceneType{type}, now_ms()});
                  std::shared_lock lock(s.mu);
                  send_json(res, 200, project_doc(s));
                });
              });

    http.Post(R"(/projects/([^/]+)/save)",
              [this](const httplib::Request& req, httplib::Response& res) {
                write_request(req, res, [&](Session& s, const json&) {
                  std::unique_lock lock(s.mu);
                  s.save_locked();
                  s.dirty = false;
                  s.since_save = 0;
                  send_json(res, 200, {{"saved", s.project_path.string()},
                                       {"revision", s.revision}});
                });
              });
  }

  void autosave_loop() {
    std::unique_lock lock(stop_mu);
    while (!stop_cv.wait_for(lock, config.autosave_interval, [this] { return stopping; })) {
      lock.unlock();
      save_dirty();
      lock.lock();
    }
  }

  void save_dirty() {
    for (auto& [id, s] : sessions) {
      std::unique_lock l(s->mu);
      if (!s->dirty) continue;
      try {
        s->save_locked();
        s->dirty = false;
        s->since_save = 0;
      } catch (const Error&) {
        // Left dirty; the next sweep retries.
      }
    }
  }

  int bind() {
    const int port = config.port == 0 ? http.bind_to_any_port(config.host)
                                      : (http.bind_to_port(config.host, config.port)
                                             ? config.port
                                             : -1);
    if (port < 0) {
      throw Error(ErrorCode::kIoError, "cannot bind " + config.host + ":" +
                                           std::to_string(config.port));
    }
    started = true;
    autosave_thread = std::thread([this] { autosave_loop(); });
    return port;
  }
};

AnnotationServer::AnnotationServer(ServerConfig config)
    : impl_(std::make_unique<Impl>(std::move(config))) {}

AnnotationServer::~AnnotationServer() { stop(); }

int AnnotationServer::start() {
  const int port = impl_->bind();
  impl_->serve_thread = std::thread([this] { impl_->http.listen_after_bind(); });
  impl_->http.wait_until_ready();
  return port;
}

void AnnotationServer::run() {
  impl_->bind();
  impl_->http.listen_after_bind();
}

void AnnotationServer::stop() {
  if (!impl_ || !impl_->started) return;
  impl_->http.stop();
  if (impl_->serve_thread.joinable()) impl_->serve_thread.join();
  {
    std::lock_guard lock(impl_->stop_mu);
    impl_->stopping = true;
  }
  impl_->stop_cv.notify_all();
  if (impl_->autosave_thread.joinable()) impl_->autosave_thread.join();
  impl_->save_dirty();
  impl_->started = false;
}

std::vector<std::string> AnnotationServer::project_ids() const {
  std::vector<std::string> ids;
  for (const auto& [id, s] : impl_->sessions) ids.push_back(id);
  return ids;
}

void AnnotationServer::save_all() { impl_->save_dirty(); }

}  // namespace lanekit
