// Copyright 2026 The Cropforge Authors.
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

// Bounding boxes in integer percentage coordinates, the policy's output
// language, plus pixel conversion and box-quality geometry.

#ifndef CROPFORGE_BBOX_HPP_
#define CROPFORGE_BBOX_HPP_

#include <array>
#include <string>
#include <string_view>

#include "cropforge/rng.hpp"

namespace cropforge {

// [x1, y1, x2, y2] in percent of image width/height, each in 0..=100.
// Not necessarily a valid box; see validate().
struct BoxPct {
  int x1 = 0;
  int y1 = 0;
  int x2 = 0;
  int y2 = 0;

  int width() const { return x2 - x1; }
  int height() const { return y2 - y1; }
  int area() const { return width() * height(); }

  friend bool operator==(const BoxPct&, const BoxPct&) = default;
};

inline constexpr BoxPct kWholeImage{0, 0, 100, 100};

struct PixelRect {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;

  long long area() const { return static_cast<long long>(w) * h; }

  friend bool operator==(const PixelRect&, const PixelRect&) = default;
};

struct BoxQuality {
  double iou = 0.0;
  double recall = 0.0;
  bool full_recall = false;
  double rel_size = 0.0;
};

// Accepts exactly "[a, b, c, d]" with optional whitespace around tokens and
// nonnegative integers <= 100. Geometry is not checked.
BoxPct parse_box(std::string_view text);

// "[x1, y1, x2, y2]" with ", " separators.
std::string format_box(const BoxPct& b);

// 0 <= x1 < x2 <= 100 and 0 <= y1 < y2 <= 100.
bool validate(const BoxPct& b);

// Round-half-away-from-zero of each edge; throws InvalidBox.
PixelRect to_pixels(const BoxPct& b, int width_px, int height_px);

// Smallest percent box containing the pixel rect (floor on the near edges,
// ceil on the far edges).
BoxPct enclosing_box(const PixelRect& r, int width_px, int height_px);

double iou(const BoxPct& a, const BoxPct& b);
double recall(const BoxPct& pred, const BoxPct& gt);
bool full_recall(const BoxPct& pred, const BoxPct& gt);
double rel_size(const BoxPct& b);
BoxQuality box_quality(const BoxPct& pred, const BoxPct& gt);

// Expansion factor looked up from the relative area of a box, in percent of
// the image. Bands are half-open [lo, hi); the larger factor applies below lo.
double expansion_factor(double rel_area_pct);

// Scales width and height by sqrt(factor) about the fixed center, so area
// scales by factor, then rounds and clamps to [0, 100]. A side that rounds
// to zero is restored to width 1.
BoxPct expand_box(const BoxPct& b, double factor);

using BoxNoise = std::array<double, 4>;

// Outward perturbation {x1-n1, y1-n2, x2+n3, y2+n4}, rounded and clamped.
// Each noise value must lie in [0, 100/grid_n].
BoxPct perturb_box(const BoxPct& b, const BoxNoise& noise, int grid_n);

// Four independent draws from Uniform[0, 100/grid_n].
BoxNoise sample_perturbation(int grid_n, Rng& rng);

}  // namespace cropforge

#endif  // CROPFORGE_BBOX_HPP_
