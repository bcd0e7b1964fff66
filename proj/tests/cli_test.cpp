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

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "oracles.hpp"

namespace
{
namespace fs = std::filesystem;
using json = nlohmann::json;

struct Result
{
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args)
{
  std::ostringstream out, err;
  const int code = lanekit::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path & path)
{
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

class CliTest : public ::testing::Test
{
protected:
  void SetUp() override { dir_ = oracle::temp_dir("cli"); }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string & name) const { return (dir_ / name).string(); }

  // synth -> ingest -> estimate for one scene kind.
  Result prepare(const std::string & kind, std::vector<std::string> synth_extra = {})
  {
    std::vector<std::string> synth = {"synth", kind, "--out", path("scene"), "--length",
                                      "150", "--width", "320", "--height", "240"};
    synth.insert(synth.end(), synth_extra.begin(), synth_extra.end());
    fs::create_directories(dir_ / "scene");
    Result r = run(synth);
    if (r.code) return r;
    r = run({"ingest", "--reconstruction", path("scene/reconstruction.json"), "--out",
             path("sequences"), "--max-length", "100", "--tail", "40"});
    if (r.code) return r;
    return run({"estimate", "--sequences", path("sequences"), "--out", path("projects")});
  }

  fs::path dir_;
};

TEST_F(CliTest, UsageErrors)
{
  EXPECT_EQ(run({}).code, lanekit::cli::kExitUsage);
  EXPECT_EQ(run({"frobnicate"}).code, lanekit::cli::kExitUsage);
  EXPECT_EQ(run({"render", "--project", "x"}).code, lanekit::cli::kExitUsage);
  EXPECT_EQ(run({"--lane-width", "-1", "synth", "straight"}).code, lanekit::cli::kExitUsage);
}

TEST_F(CliTest, StraightSequenceNeedsAReusedRoadFrame)
{
  const Result r = prepare("straight");
  EXPECT_EQ(r.code, lanekit::cli::kExitEstimation);
  EXPECT_NE(r.err.find("InsufficientTurning"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("--road-frame"), std::string::npos) << r.err;

  // The advice works: reuse the frame from a turning scene.
  const Result reuse = run({"estimate", "--sequences", path("sequences"), "--out",
                            path("projects"), "--road-frame",
                            path("scene/truth_road_frame.json")});
  EXPECT_EQ(reuse.code, 0) << reuse.err;
  EXPECT_TRUE(fs::exists(dir_ / "projects" / "seq_000.project.json"));
}

TEST_F(CliTest, MissingInputIsAnIoError)
{
  const Result r = run({"ingest", "--reconstruction", path("absent.json")});
  EXPECT_EQ(r.code, lanekit::cli::kExitIo);
  std::ofstream(dir_ / "bad.json") << "{";
  EXPECT_EQ(run({"ingest", "--reconstruction", path("bad.json")}).code, lanekit::cli::kExitIo);
}

TEST_F(CliTest, MetricsOfAnExportAgainstItself)
{
  ASSERT_EQ(prepare("arc").code, 0);
  ASSERT_EQ(run({"export", "--projects", path("projects"), "--out", path("exports")}).code, 0);
  const std::string x = path("exports/seq_000");
  Result r = run({"--json", "metrics", "iou", "--pred", x, "--gt", x});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(json::parse(r.out)["mean_iou"], 1.0) << r.out;
  r = run({"--json", "metrics", "ap", "--pred", x, "--gt", x});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(json::parse(r.out)["ap"], 1.0) << r.out;
  r = run({"--json", "metrics", "agreement", "--a", x, "--b", x});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(json::parse(r.out)["joint_fraction"], 1.0) << r.out;
  // Plain tables also come out.
  r = run({"metrics", "iou", "--pred", x, "--gt", x});
  EXPECT_EQ(r.code, 0);
  EXPECT_FALSE(r.out.empty());
}

TEST_F(CliTest, JsonOutputsParse)
{
  fs::create_directories(dir_ / "scene");
  for (const auto & args : std::vector<std::vector<std::string>>{
         {"--json", "synth", "arc", "--out", path("scene"), "--length", "150", "--width", "320",
          "--height", "240"},
         {"--json", "ingest", "--reconstruction", path("scene/reconstruction.json"), "--out",
          path("sequences"), "--max-length", "100", "--tail", "40"},
         {"--json", "estimate", "--sequences", path("sequences"), "--out", path("projects")},
         {"--json", "export", "--projects", path("projects"), "--out", path("exports")},
         {"--json", "stats", "--exports", path("exports/seq_000")}}) {
    const Result r = run(args);
    ASSERT_EQ(r.code, 0) << args[1] << ": " << r.err;
    const json doc = json::parse(r.out);
    EXPECT_EQ(json::parse(doc.dump()), doc);
  }
  const json est = json::parse(
    run({"--json", "estimate", "--sequences", path("sequences"), "--out", path("projects")}).out);
  const json & first = est["results"][0];
  EXPECT_TRUE(first.contains("weights"));
  EXPECT_EQ(first["road_frame"]["n"].size(), 3u);
}

TEST_F(CliTest, ExportIsDeterministic)
{
  ASSERT_EQ(prepare("arc").code, 0);
  ASSERT_EQ(run({"export", "--projects", path("projects"), "--out", path("a")}).code, 0);
  ASSERT_EQ(run({"export", "--projects", path("projects"), "--out", path("b")}).code, 0);
  std::size_t files = 0;
  for (const auto & e : fs::recursive_directory_iterator(dir_ / "a")) {
    if (!e.is_regular_file()) continue;
    ++files;
    EXPECT_EQ(slurp(e.path()), slurp(dir_ / "b" / fs::relative(e.path(), dir_ / "a")));
  }
  EXPECT_GT(files, 2u);
}

TEST_F(CliTest, RenderOneFrame)
{
  ASSERT_EQ(prepare("arc").code, 0);
  const Result r = run({"render", "--project", path("projects/seq_000.project.json"),
                        "--frame", "2", "--out", path("one")});
  ASSERT_EQ(r.code, 0) << r.err;
  std::size_t pngs = 0;
  for (const auto & e : fs::directory_iterator(dir_ / "one")) pngs += e.path().extension() == ".png";
  EXPECT_EQ(pngs, 2u);
  EXPECT_EQ(run({"render", "--project", path("projects/seq_000.project.json"), "--frame",
                 "100000", "--out", path("one")}).code,
            lanekit::cli::kExitUsage);
}

TEST_F(CliTest, ConfigFileOverrides)
{
  std::ofstream(dir_ / "config.json") << R"({"lane_width": 3.0})";
  ASSERT_EQ(prepare("arc").code, 0);
  ASSERT_EQ(run({"--config", path("config.json"), "estimate", "--sequences", path("sequences"),
                 "--out", path("p3")}).code, 0);
  const json doc = json::parse(slurp(dir_ / "p3" / "seq_000.project.json"));
  for (double w : doc["bands"][0]["left_w"]) EXPECT_EQ(w, 1.5);
  for (double w : doc["bands"][0]["right_w"]) EXPECT_EQ(w, -1.5);
}

TEST_F(CliTest, EndToEndEgoIouAgainstAnalyticMasks)
{
  ASSERT_EQ(prepare("arc", {"--radius", "40", "--spacing", "1.0"}).code, 0);
  ASSERT_EQ(run({"export", "--projects", path("projects"), "--out", path("exports")}).code, 0);
  Result r = run({"synth", "arc", "--length", "150", "--width", "320", "--height", "240",
                  "--radius", "40", "--spacing", "1.0", "--truth-for", path("sequences"),
                  "--truth-out", path("truth")});
  ASSERT_EQ(r.code, 0) << r.err;
  r = run({"--json", "metrics", "iou", "--pred", path("exports/seq_000"), "--gt",
           path("truth/seq_000")});
  ASSERT_EQ(r.code, 0) << r.err;
  const json doc = json::parse(r.out);
  EXPECT_GE(doc["classes"]["ego_lane"]["iou"].get<double>(), 0.99) << r.out;
}

}  // namespace
