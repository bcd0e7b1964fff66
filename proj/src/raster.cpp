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

#include "lanekit/raster.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace lanekit {
namespace {

// First integer column whose center is >= x.
int first_center_at_or_after(double x, int width) {
  if (!(x > -1.0)) return 0;
  if (!(x < width + 1.0)) return width;
  int c = static_cast<int>(std::ceil(x - 0.5));
  // Settle rounding of x - 0.5 against the exact center comparison.
  while (c > 0 && (c - 1) + 0.5 >= x) --c;
  while (c + 0.5 < x) ++c;
  return std::clamp(c, 0, width);
}

}  // namespace

void scan_polygon(std::span<const Pixel> polygon, int width, int height,
                  const std::function<void(int, int, int)>& emit) {
  const std::size_t n = polygon.size();
  if (n < 3 || width <= 0 || height <= 0) return;

  double min_v = polygon[0].v, max_v = polygon[0].v;
  for (const Pixel& p : polygon) {
    min_v = std::min(min_v, p.v);
    max_v = std::max(max_v, p.v);
  }
  if (!(max_v > 0.0) || !(min_v < height)) return;
  const int y_begin = min_v < 0.0 ? 0 : static_cast<int>(std::floor(min_v));
  const int y_end =
      max_v >= height ? height : std::min(height, static_cast<int>(std::ceil(max_v)) + 1);

  std::vector<double> xs;
  xs.reserve(n);
  for (int y = y_begin; y < y_end; ++y) {
    const double py = y + 0.5;
    xs.clear();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
      const Pixel& a = polygon[i];
      const Pixel& b = polygon[j];
      if ((a.v > py) != (b.v > py)) {
        xs.push_back((b.u - a.u) * (py - a.v) / (b.v - a.v) + a.u);
      }
    }
    std::sort(xs.begin(), xs.end());
    for (std::size_t k = 0; k + 1 < xs.size(); k += 2) {
      const int x0 = first_center_at_or_after(xs[k], width);
      const int x1 = first_center_at_or_after(xs[k + 1], width);
      if (x1 > x0) emit(y, x0, x1);
    }
  }
}

}  // namespace lanekit
