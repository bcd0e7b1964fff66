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

// Batch entry points: ingest, estimate, render, export, stats, metrics,
// synth and serve.

#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace lanekit::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitEstimation = 2;
inline constexpr int kExitIo = 3;

struct Config {
  double lane_width = 3.5;
  double camera_height = 1.2;
  double width_step = 0.05;
  double z_near = 0.1;
  // Default directories: "sequences", "projects", "exports".
  std::map<std::string, std::string> paths;

  // Throws Error(kInvalidParams) on non-positive dimensions.
  void validate() const;
  // Same field names as the members; missing fields keep their defaults.
  static Config from_json(std::string_view text);
  std::string to_json() const;
};

// args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace lanekit::cli
