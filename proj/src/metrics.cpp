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

#include "cropforge/metrics.hpp"

#include <algorithm>
#include <map>
#include <numeric>

#include "cropforge/error.hpp"

namespace cropforge {
namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

void require_answers(const AnswerSet& gts) {
  if (gts.empty()) throw Error(ErrorKind::kEmptyAnswerSet, "empty answer set");
}

}  // namespace

std::u32string decode_utf8(std::string_view s) {
  std::u32string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    const auto c = static_cast<unsigned char>(s[i]);
    int len = 0;
    char32_t cp = 0;
    if (c < 0x80) {
      len = 1;
      cp = c;
    } else if ((c & 0xE0) == 0xC0) {
      len = 2;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      len = 3;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      len = 4;
      cp = c & 0x07;
    }
    bool ok = len > 0 && i + len <= s.size();
    for (int k = 1; ok && k < len; ++k) {
      const auto cc = static_cast<unsigned char>(s[i + k]);
      if ((cc & 0xC0) != 0x80) ok = false;
      cp = (cp << 6) | (cc & 0x3F);
    }
    if (ok && (cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF))) ok = false;
    if (!ok) {
      out.push_back(U'\uFFFD');
      ++i;
      continue;
    }
    out.push_back(cp);
    i += len;
  }
  return out;
}

int levenshtein(const std::u32string& a, const std::u32string& b) {
  const std::u32string& s = a.size() < b.size() ? b : a;
  const std::u32string& t = a.size() < b.size() ? a : b;
  std::vector<int> row(t.size() + 1);
  std::iota(row.begin(), row.end(), 0);
  for (std::size_t i = 1; i <= s.size(); ++i) {
    int diag = row[0];
    row[0] = static_cast<int>(i);
    for (std::size_t j = 1; j <= t.size(); ++j) {
      const int up = row[j];
      row[j] = std::min({up + 1, row[j - 1] + 1,
                         diag + (s[i - 1] == t[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[t.size()];
}

int levenshtein(std::string_view a, std::string_view b) {
  return levenshtein(decode_utf8(a), decode_utf8(b));
}

std::string normalize_answer(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  for (char c : s) {
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back((c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c);
  }
  return out;
}

double anls(std::string_view pred, const AnswerSet& gts, double threshold) {
  require_answers(gts);
  const std::u32string p = decode_utf8(normalize_answer(pred));
  double best = 0.0;
  for (const auto& g : gts) {
    const std::u32string q = decode_utf8(normalize_answer(g));
    const std::size_t len = std::max(p.size(), q.size());
    const double sim =
        len == 0 ? 1.0
                 : 1.0 - static_cast<double>(levenshtein(p, q)) /
                             static_cast<double>(len);
    if (sim >= threshold) best = std::max(best, sim);
  }
  return best;
}

double vqa_accuracy(std::string_view pred, const AnswerSet& gts) {
  require_answers(gts);
  const std::string p = normalize_answer(pred);
  int matches = 0;
  for (const auto& g : gts) {
    if (normalize_answer(g) == p) ++matches;
  }
  return std::min(1.0, matches / 3.0);
}

std::string most_common_answer(const AnswerSet& gts) {
  require_answers(gts);
  std::map<std::string, int> counts;
  std::string best;
  int best_count = 0;
  for (const auto& g : gts) {
    const std::string n = normalize_answer(g);
    const int c = ++counts[n];
    if (c > best_count) {
      best_count = c;
      best = n;
    }
  }
  return best;
}

}  // namespace cropforge
