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

#include <atomic>
#include <thread>

#include "cropforge/error.hpp"
#include "cropforge/parallel.hpp"

namespace cropforge {

std::string_view error_kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kMalformedBox: return "MalformedBox";
    case ErrorKind::kInvalidBox: return "InvalidBox";
    case ErrorKind::kNonPositiveArea: return "NonPositiveArea";
    case ErrorKind::kNoiseOutOfRange: return "NoiseOutOfRange";
    case ErrorKind::kEmptyAnswerSet: return "EmptyAnswerSet";
    case ErrorKind::kPlacementFailure: return "PlacementFailure";
    case ErrorKind::kUnknownRegion: return "UnknownRegion";
    case ErrorKind::kShapeMismatch: return "ShapeMismatch";
    case ErrorKind::kCoordOutOfRange: return "CoordOutOfRange";
    case ErrorKind::kEmptyDataset: return "EmptyDataset";
    case ErrorKind::kGroupTooSmall: return "GroupTooSmall";
    case ErrorKind::kBadGridSize: return "BadGridSize";
    case ErrorKind::kFileError: return "FileError";
    case ErrorKind::kConfigError: return "ConfigError";
    case ErrorKind::kInvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

namespace {
std::atomic<unsigned> g_max_threads{0};
}

void set_max_threads(unsigned n) { g_max_threads.store(n); }

unsigned max_threads() {
  const unsigned n = g_max_threads.load();
  if (n != 0) return n;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

}  // namespace cropforge
