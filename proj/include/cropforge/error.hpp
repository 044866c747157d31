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

#ifndef CROPFORGE_ERROR_HPP_
#define CROPFORGE_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace cropforge {

enum class ErrorKind {
  kMalformedBox,
  kInvalidBox,
  kNonPositiveArea,
  kNoiseOutOfRange,
  kEmptyAnswerSet,
  kPlacementFailure,
  kUnknownRegion,
  kShapeMismatch,
  kCoordOutOfRange,
  kEmptyDataset,
  kGroupTooSmall,
  kBadGridSize,
  kFileError,
  kConfigError,
  kInvalidArgument,
};

std::string_view error_kind_name(ErrorKind kind);

// All library failures surface as this exception. The kind maps one-to-one
// onto the error names used in diagnostics (e.g. "MalformedBox").
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace cropforge

#endif  // CROPFORGE_ERROR_HPP_
