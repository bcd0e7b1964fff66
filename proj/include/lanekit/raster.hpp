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

// Scanline polygon fill with pixel-center sampling.
//
// Pixel (x, y) is covered when its center (x + 0.5, y + 0.5) is inside the
// polygon under the even-odd rule. Edges are half-open in y (an edge spans
// centers with min(v) < py <= max(v) in the crossing test's terms) and spans
// are half-open in x ([x_enter, x_exit)), so two polygons sharing an edge
// never both cover a pixel and never leave a gap between them.

#pragma once

#include <functional>
#include <span>

#include "lanekit/geometry.hpp"

namespace lanekit {

// Calls emit(y, x_begin, x_end) for every covered run, x_end exclusive.
// Runs are clipped to [0, width) x [0, height).
void scan_polygon(std::span<const Pixel> polygon, int width, int height,
                  const std::function<void(int, int, int)>& emit);

}  // namespace lanekit
