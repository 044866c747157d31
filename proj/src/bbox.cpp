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

#include "cropforge/bbox.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

#include "cropforge/error.hpp"

namespace cropforge {
namespace {

void require_valid(const BoxPct& b) {
  if (!validate(b)) {
    throw Error(ErrorKind::kInvalidBox, "invalid box " + format_box(b));
  }
}

int clamp_pct(double v) {
  return static_cast<int>(std::clamp(std::round(v), 0.0, 100.0));
}

long long intersection_area(const BoxPct& a, const BoxPct& b) {
  const int w = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const int h = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  if (w <= 0 || h <= 0) return 0;
  return static_cast<long long>(w) * h;
}

// floor(num / den + 1/2) for num, den >= 0.
int round_div(long long num, long long den) {
  return static_cast<int>((2 * num + den) / (2 * den));
}

}  // namespace

BoxPct parse_box(std::string_view text) {
  auto fail = [&](const char* why) {
    return Error(ErrorKind::kMalformedBox,
                 std::string(why) + ": '" + std::string(text) + "'");
  };
  std::size_t i = 0;
  auto skip_ws = [&] {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
  };
  skip_ws();
  if (i >= text.size() || text[i] != '[') throw fail("missing '['");
  ++i;
  std::array<int, 4> v{};
  for (int k = 0; k < 4; ++k) {
    skip_ws();
    const std::size_t start = i;
    long long value = 0;
    while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) {
      value = value * 10 + (text[i] - '0');
      if (value > 100) throw fail("coordinate out of range");
      ++i;
    }
    if (i == start) throw fail("expected a nonnegative integer");
    v[k] = static_cast<int>(value);
    skip_ws();
    if (k < 3) {
      if (i >= text.size() || text[i] != ',') throw fail("expected 4 coordinates");
      ++i;
    }
  }
  if (i >= text.size() || text[i] != ']') throw fail("missing ']'");
  ++i;
  skip_ws();
  if (i != text.size()) throw fail("trailing characters");
  return BoxPct{v[0], v[1], v[2], v[3]};
}

std::string format_box(const BoxPct& b) {
  std::ostringstream os;
  os << '[' << b.x1 << ", " << b.y1 << ", " << b.x2 << ", " << b.y2 << ']';
  return os.str();
}

bool validate(const BoxPct& b) {
  return 0 <= b.x1 && b.x1 < b.x2 && b.x2 <= 100 &&  //
         0 <= b.y1 && b.y1 < b.y2 && b.y2 <= 100;
}

PixelRect to_pixels(const BoxPct& b, int width_px, int height_px) {
  require_valid(b);
  const long long w = width_px, h = height_px;
  const int x1 = round_div(b.x1 * w, 100), x2 = round_div(b.x2 * w, 100);
  const int y1 = round_div(b.y1 * h, 100), y2 = round_div(b.y2 * h, 100);
  return PixelRect{x1, y1, x2 - x1, y2 - y1};
}

BoxPct enclosing_box(const PixelRect& r, int width_px, int height_px) {
  const long long w = width_px, h = height_px;
  auto floor_pct = [](long long v, long long dim) {
    return static_cast<int>(100 * v / dim);
  };
  auto ceil_pct = [](long long v, long long dim) {
    return static_cast<int>((100 * v + dim - 1) / dim);
  };
  BoxPct b{floor_pct(r.x, w), floor_pct(r.y, h), ceil_pct(r.x + r.w, w),
           ceil_pct(r.y + r.h, h)};
  b.x1 = std::clamp(b.x1, 0, 100);
  b.y1 = std::clamp(b.y1, 0, 100);
  b.x2 = std::clamp(b.x2, 0, 100);
  b.y2 = std::clamp(b.y2, 0, 100);
  return b;
}

double iou(const BoxPct& a, const BoxPct& b) {
  require_valid(a);
  require_valid(b);
  const long long inter = intersection_area(a, b);
  const long long uni = static_cast<long long>(a.area()) + b.area() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

double recall(const BoxPct& pred, const BoxPct& gt) {
  require_valid(pred);
  require_valid(gt);
  return static_cast<double>(intersection_area(pred, gt)) /
         static_cast<double>(gt.area());
}

bool full_recall(const BoxPct& pred, const BoxPct& gt) {
  require_valid(pred);
  require_valid(gt);
  return pred.x1 <= gt.x1 && pred.y1 <= gt.y1 && pred.x2 >= gt.x2 &&
         pred.y2 >= gt.y2;
}

double rel_size(const BoxPct& b) {
  require_valid(b);
  return static_cast<double>(b.area()) / 10000.0;
}

BoxQuality box_quality(const BoxPct& pred, const BoxPct& gt) {
  return BoxQuality{iou(pred, gt), recall(pred, gt), full_recall(pred, gt),
                    rel_size(pred)};
}

double expansion_factor(double rel_area_pct) {
  if (!(rel_area_pct > 0.0)) {
    throw Error(ErrorKind::kNonPositiveArea, "relative area must be positive");
  }
  if (rel_area_pct > 100.0) {
    throw Error(ErrorKind::kInvalidArgument, "relative area exceeds 100%");
  }
  if (rel_area_pct < 0.16) return 45.0;
  if (rel_area_pct < 0.38) return 10.0;
  if (rel_area_pct < 0.91) return 4.0;
  if (rel_area_pct < 3.51) return 2.0;
  return 1.0;
}

BoxPct expand_box(const BoxPct& b, double factor) {
  require_valid(b);
  if (!(factor > 0.0) || !std::isfinite(factor)) {
    throw Error(ErrorKind::kInvalidArgument, "expansion factor must be positive");
  }
  const double s = std::sqrt(factor);
  auto scale_axis = [s](int lo, int hi, int& out_lo, int& out_hi) {
    const double center = 0.5 * (lo + hi);
    const double half = 0.5 * (hi - lo) * s;
    out_lo = clamp_pct(center - half);
    out_hi = clamp_pct(center + half);
    if (out_hi <= out_lo) {
      if (out_lo < 100) {
        out_hi = out_lo + 1;
      } else {
        out_lo = out_hi - 1;
      }
    }
  };
  BoxPct out;
  scale_axis(b.x1, b.x2, out.x1, out.x2);
  scale_axis(b.y1, b.y2, out.y1, out.y2);
  return out;
}

BoxPct perturb_box(const BoxPct& b, const BoxNoise& noise, int grid_n) {
  require_valid(b);
  if (grid_n < 1) throw Error(ErrorKind::kBadGridSize, "grid size must be >= 1");
  const double hi = 100.0 / grid_n;
  for (double n : noise) {
    if (!(n >= 0.0 && n <= hi)) {
      throw Error(ErrorKind::kNoiseOutOfRange, "noise outside [0, 100/N]");
    }
  }
  return BoxPct{clamp_pct(b.x1 - noise[0]), clamp_pct(b.y1 - noise[1]),
                clamp_pct(b.x2 + noise[2]), clamp_pct(b.y2 + noise[3])};
}

BoxNoise sample_perturbation(int grid_n, Rng& rng) {
  if (grid_n < 1) throw Error(ErrorKind::kBadGridSize, "grid size must be >= 1");
  const double hi = 100.0 / grid_n;
  BoxNoise n;
  for (double& v : n) v = rng.uniform(0.0, hi);
  return n;
}

}  // namespace cropforge
