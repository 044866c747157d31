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

#ifndef CROPFORGE_METRICS_HPP_
#define CROPFORGE_METRICS_HPP_

#include <string>
#include <string_view>
#include <vector>

namespace cropforge {

// Ground-truth answers for one query, original case, repeats allowed.
using AnswerSet = std::vector<std::string>;

inline constexpr double kAnlsThreshold = 0.5;

// Decodes UTF-8 into Unicode scalar values. Invalid bytes decode to U+FFFD.
std::u32string decode_utf8(std::string_view s);

// Unit-cost edit distance over Unicode scalar values.
int levenshtein(std::string_view a, std::string_view b);
int levenshtein(const std::u32string& a, const std::u32string& b);

// Lowercase (ASCII), trim, and collapse internal whitespace runs.
std::string normalize_answer(std::string_view s);

double anls(std::string_view pred, const AnswerSet& gts,
            double threshold = kAnlsThreshold);

// min(1, matches / 3) over normalized exact matches.
double vqa_accuracy(std::string_view pred, const AnswerSet& gts);

// The most frequent answer after normalization; on ties, the answer that
// reached the winning count first.
// Returned in normalized form.
std::string most_common_answer(const AnswerSet& gts);

}  // namespace cropforge

#endif  // CROPFORGE_METRICS_HPP_
