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

// HTTP/JSON annotation service. Projects live in one directory as
// <id>.project.json; their sequence_ref is resolved relative to it.
//
//   GET  /sequences
//   GET  /projects/{id}
//   GET  /projects/{id}/frames/{i}/image
//   GET  /projects/{id}/frames/{i}/overlay
//   POST /projects/{id}/edits          EditCommand JSON, ?frame=i
//   POST /projects/{id}/save
//   POST /projects/{id}/reject
//   POST /projects/{id}/scene-type     {"scene_type": "..."}
//
// Writes to one project are serialized; a write that finds the project busy,
// or whose optional base_revision is stale, gets 409.

#pragma once

#include <chrono>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "lanekit/annotation.hpp"
#include "lanekit/ingest.hpp"

namespace lanekit {

struct ServerConfig {
  std::filesystem::path projects_dir;
  // Root for relative image_ref paths; defaults to each sequence file's dir.
  std::filesystem::path images_dir;
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  double z_near = 0.1;
  double width_step = 0.05;  // advertised to clients
  std::chrono::milliseconds autosave_interval{30000};
  int autosave_every = 20;  // commands
};

// {bands:[{band_id, kind, quads:[[[u,v],...],...]}], crop_top_rows,
// horizon_rows}, with a note and no bands past the annotatable range.
std::string overlay_json(const AnnotationProject& project,
                         const Sequence& sequence, int frame_index,
                         double z_near = 0.1);

class AnnotationServer {
 public:
  // Loads every project in config.projects_dir. Throws Error on bad files.
  explicit AnnotationServer(ServerConfig config);
  ~AnnotationServer();

  AnnotationServer(const AnnotationServer&) = delete;
  AnnotationServer& operator=(const AnnotationServer&) = delete;

  // Binds and serves on a background thread; returns the bound port.
  int start();
  // Binds and serves on the calling thread until stop().
  void run();
  // Stops serving and saves dirty projects.
  void stop();

  std::vector<std::string> project_ids() const;
  void save_all();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace lanekit
