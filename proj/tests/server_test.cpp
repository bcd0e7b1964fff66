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

#include <gtest/gtest.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "lanekit/annotation.hpp"
#include "lanekit/geometry.hpp"
#include "lanekit/ingest.hpp"
#include "lanekit/synthetic.hpp"
#include "oracles.hpp"

namespace
{
namespace fs = std::filesystem;
using json = nlohmann::json;
using lanekit::AnnotationProject;
using lanekit::EditCommand;
using lanekit::Side;
namespace edit = lanekit::edit;

void write_file(const fs::path & path, const std::string & text)
{
  std::ofstream(path, std::ios::binary) << text;
}

std::string read_file(const fs::path & path)
{
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

class ServerTest : public ::testing::Test
{
protected:
  void SetUp() override
  {
    dir_ = oracle::temp_dir("server");
    lanekit::synthetic::Params p;
    p.length = 60.0;
    const auto scene = lanekit::synthetic::generate(p);
    sequence_ = lanekit::make_sequence(
      "road", lanekit::synthetic::default_camera(320, 240), scene.frames, 20.0);
    sequence_.frames[0].image_ref = "img/f0.jpg";
    write_file(dir_ / "road.sequence.json", lanekit::save_sequence(sequence_));
    project_ = lanekit::init_project(sequence_, scene.truth, 3.5, "road.sequence.json");
    write_file(dir_ / "road.project.json", lanekit::save_project(project_));
    fs::create_directories(dir_ / "img");
    write_file(dir_ / "img" / "f0.jpg", "not really a jpeg");

    lanekit::ServerConfig config;
    config.projects_dir = dir_;
    config.port = 0;
    config.autosave_every = 1000;
    server_ = std::make_unique<lanekit::AnnotationServer>(config);
    port_ = server_->start();
    client_ = std::make_unique<httplib::Client>("127.0.0.1", port_);
  }

  void TearDown() override
  {
    client_.reset();
    server_.reset();
    fs::remove_all(dir_);
  }

  httplib::Result post(const std::string & path, const json & body)
  {
    return client_->Post(path, body.dump(), "application/json");
  }

  static json command(const EditCommand & cmd, int frame)
  {
    json body = json::parse(lanekit::edit_to_json(cmd));
    body["frame"] = frame;
    return body;
  }

  fs::path dir_;
  lanekit::Sequence sequence_;
  AnnotationProject project_;
  std::unique_ptr<lanekit::AnnotationServer> server_;
  int port_ = 0;
  std::unique_ptr<httplib::Client> client_;
};

TEST_F(ServerTest, ListsSequencesAndProject)
{
  auto res = client_->Get("/sequences");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  const json list = json::parse(res->body);
  ASSERT_EQ(list.size(), 1u);
  EXPECT_EQ(list[0]["id"], "road");
  EXPECT_EQ(list[0]["frame_count"], sequence_.frame_count());

  res = client_->Get("/projects/road");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  const json doc = json::parse(res->body);
  EXPECT_EQ(doc["revision"], 0);
  const AnnotationProject loaded = lanekit::load_project(res->body);
  EXPECT_EQ(loaded, project_);
}

TEST_F(ServerTest, WidthEditOverlayMatchesLibraryProjection)
{
  const int frame = 3;
  const EditCommand cmd{edit::AdjustWidth{project_.ego().band_id, Side::kRight, -0.05,
                                          std::nullopt}, 1234};
  auto res = post("/projects/road/edits", command(cmd, frame));
  ASSERT_TRUE(res);
  ASSERT_EQ(res->status, 200) << res->body;
  const json overlay = json::parse(res->body);
  EXPECT_EQ(overlay["revision"], 1);

  AnnotationProject expected = project_;
  expected.apply(cmd);
  ASSERT_EQ(overlay["bands"].size(), expected.bands().size());
  const lanekit::LaneBand & ego = expected.ego();
  const auto quads = lanekit::lane_polygons(sequence_.frames, sequence_.camera,
                                            expected.road(), ego.offsets(), frame);
  const json & got = overlay["bands"][0]["quads"];
  ASSERT_EQ(got.size(), quads.size());
  for (std::size_t q = 0; q < quads.size(); ++q) {
    ASSERT_EQ(got[q].size(), quads[q].vertices.size());
    for (std::size_t k = 0; k < quads[q].vertices.size(); ++k) {
      EXPECT_EQ(got[q][k][0].get<double>(), quads[q].vertices[k].u);
      EXPECT_EQ(got[q][k][1].get<double>(), quads[q].vertices[k].v);
    }
  }
  EXPECT_EQ(overlay, [&] {
    json doc = json::parse(lanekit::overlay_json(expected, sequence_, frame));
    doc["revision"] = 1;
    return doc;
  }());
}

TEST_F(ServerTest, ImageIsServedFromSequenceDirectory)
{
  auto res = client_->Get("/projects/road/frames/0/image");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  EXPECT_EQ(res->body, "not really a jpeg");
  res = client_->Get("/projects/road/frames/1/image");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 404);
}

TEST_F(ServerTest, BeyondAnnotatableRangeHasNoBands)
{
  const int frame = sequence_.annotatable_end_index + 1;
  ASSERT_LT(frame, sequence_.frame_count());
  auto res = client_->Get("/projects/road/frames/" + std::to_string(frame) + "/overlay");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  const json doc = json::parse(res->body);
  EXPECT_TRUE(doc["bands"].empty());
  EXPECT_TRUE(doc.contains("note"));
}

TEST_F(ServerTest, MissingThingsAre404)
{
  auto res = client_->Get("/projects/nope");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 404);
  res = client_->Get("/projects/road/frames/9999/overlay");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 404);
  res = client_->Get("/projects/road/frames/abc/overlay");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 404);
  res = post("/projects/nope/edits", command({edit::AdjustHeight{0.1}, 1}, 0));
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 404);
}

TEST_F(ServerTest, RejectedProjectRefusesEdits)
{
  auto res = post("/projects/road/reject", json::object());
  ASSERT_TRUE(res);
  ASSERT_EQ(res->status, 200);
  res = post("/projects/road/edits", command({edit::AdjustHeight{0.1}, 1}, 0));
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 422);
  EXPECT_NE(res->body.find("RejectedSequence"), std::string::npos) << res->body;
  // Scene type may still be set.
  res = post("/projects/road/scene-type", {{"scene_type", "rural"}});
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  EXPECT_EQ(json::parse(res->body)["status"], "rejected");
}

TEST_F(ServerTest, InvalidEditIs422AndLeavesRevision)
{
  auto res = post("/projects/road/edits", command({edit::AdjustHeight{-5.0}, 1}, 0));
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 422);
  res = client_->Post("/projects/road/edits", "{not json", "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 422);
  res = client_->Get("/projects/road");
  EXPECT_EQ(json::parse(res->body)["revision"], 0);
}

TEST_F(ServerTest, StaleBaseRevisionConflicts)
{
  json body = command({edit::AdjustHeight{0.1}, 1}, 0);
  body["base_revision"] = 0;
  auto res = post("/projects/road/edits", body);
  ASSERT_TRUE(res);
  ASSERT_EQ(res->status, 200);
  res = post("/projects/road/edits", body);
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 409);
  body["base_revision"] = 1;
  res = post("/projects/road/edits", body);
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
}

TEST_F(ServerTest, SaveWritesReplayableLog)
{
  const int ego = project_.ego().band_id;
  std::vector<EditCommand> cmds = {
    {edit::AdjustHeight{0.05}, 10},
    {edit::AddBand{Side::kLeft, lanekit::BandKind::kLane, 3.5}, 11},
    {edit::AdjustWidth{ego, Side::kLeft, 0.1, 5}, 12},
    {edit::SetHorizon{40}, 13},
  };
  for (const auto & c : cmds) {
    auto res = post("/projects/road/edits", command(c, 0));
    ASSERT_TRUE(res);
    ASSERT_EQ(res->status, 200) << res->body;
  }
  auto res = post("/projects/road/save", json::object());
  ASSERT_TRUE(res);
  ASSERT_EQ(res->status, 200);
  const AnnotationProject saved = lanekit::load_project(read_file(dir_ / "road.project.json"));
  AnnotationProject expected = project_;
  for (const auto & c : cmds) expected.apply(c);
  EXPECT_EQ(saved, expected);
  EXPECT_EQ(AnnotationProject::replay(saved.origin(), saved.edit_log()), expected);
}

TEST_F(ServerTest, StopSavesDirtyProjects)
{
  auto res = post("/projects/road/edits", command({edit::SetCrop{12}, 5}, 0));
  ASSERT_TRUE(res);
  ASSERT_EQ(res->status, 200);
  server_->stop();
  const AnnotationProject saved = lanekit::load_project(read_file(dir_ / "road.project.json"));
  EXPECT_EQ(saved.crop_top_rows(), 12);
}

TEST_F(ServerTest, ConcurrentWritersSerialize)
{
  std::atomic<int> ok{0};
  std::atomic<int> busy{0};
  std::vector<std::thread> threads;
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&, t] {
      httplib::Client c("127.0.0.1", port_);
      for (int i = 0; i < 25; ++i) {
        const json body = command({edit::AdjustHeight{t % 2 ? 0.05 : -0.05}, i}, 0);
        auto res = c.Post("/projects/road/edits", body.dump(), "application/json");
        if (!res) continue;
        if (res->status == 200) ++ok;
        if (res->status == 409) ++busy;
      }
    });
  }
  // Readers run alongside.
  for (int i = 0; i < 20; ++i) {
    auto res = client_->Get("/projects/road/frames/2/overlay");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 200);
  }
  for (auto & th : threads) th.join();
  EXPECT_EQ(ok + busy, 100);
  auto res = client_->Get("/projects/road");
  const json doc = json::parse(res->body);
  EXPECT_EQ(doc["revision"], ok.load());
  const AnnotationProject p = lanekit::load_project(res->body);
  EXPECT_EQ(p.edit_log().size(), static_cast<std::size_t>(ok.load()));
  p.check_invariants();
}

}  // namespace
