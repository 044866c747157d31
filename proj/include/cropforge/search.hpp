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

#ifndef CROPFORGE_SEARCH_HPP_
#define CROPFORGE_SEARCH_HPP_

#include <vector>

#include "cropforge/bbox.hpp"
#include "cropforge/world.hpp"

namespace cropforge {

inline constexpr int kMaxGridSize = 20;

struct GridCropSet {
  int n = 0;
  std::vector<BoxPct> crops;
};

// Cell edge i of an n-cell axis, round(100 * i / n).
int grid_edge(int i, int n);

// Every rectangle spanning a contiguous block of cells of an n x n grid,
// (n(n+1)/2)^2 in total. Ordered row-major by top-left corner, then
// row-major by bottom-right corner.
GridCropSet enumerate_grid_crops(int n);

struct CropChoice {
  BoxPct box;
  double ll = 0.0;
};

// Argmax of oracle_loglik over the grid crops; the first crop in
// enumeration order wins ties.
CropChoice best_crop_by_ll(const Scene& scene, const Query& query, int n,
                           const OracleConfig& oracle);

}  // namespace cropforge

#endif  // CROPFORGE_SEARCH_HPP_
