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

#include "cropforge/search.hpp"

#include "cropforge/error.hpp"

namespace cropforge {

int grid_edge(int i, int n) { return (200 * i + n) / (2 * n); }

GridCropSet enumerate_grid_crops(int n) {
  if (n < 1 || n > kMaxGridSize) {
    throw Error(ErrorKind::kBadGridSize,
                "grid size " + std::to_string(n) + " outside 1..20");
  }
  GridCropSet set;
  set.n = n;
  set.crops.reserve(static_cast<std::size_t>(n * (n + 1) / 2) * (n * (n + 1) / 2));
  for (int top = 0; top < n; ++top) {
    for (int left = 0; left < n; ++left) {
      for (int bottom = top; bottom < n; ++bottom) {
        for (int right = left; right < n; ++right) {
          set.crops.push_back(BoxPct{grid_edge(left, n), grid_edge(top, n),
                                     grid_edge(right + 1, n), grid_edge(bottom + 1, n)});
        }
      }
    }
  }
  return set;
}

CropChoice best_crop_by_ll(const Scene& scene, const Query& query, int n,
                           const OracleConfig& oracle) {
  const GridCropSet set = enumerate_grid_crops(n);
  CropChoice best{set.crops.front(),
                  oracle_loglik(scene, query, set.crops.front(), oracle)};
  for (std::size_t i = 1; i < set.crops.size(); ++i) {
    const double ll = oracle_loglik(scene, query, set.crops[i], oracle);
    if (ll > best.ll) best = CropChoice{set.crops[i], ll};
  }
  return best;
}

}  // namespace cropforge
