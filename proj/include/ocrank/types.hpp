/*
 * Copyright 2026 The ocrank Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *   http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <algorithm>
#include <charconv>
#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <unordered_map>
#include <utility>
#include <vector>

namespace ocrank {

/// Malformed input text (CSV rows, model files, config files).
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Well-formed input that violates a domain invariant.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numerical failure during training (non-finite parameters).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using StudentIndex = std::size_t;
using CourseIndex = std::size_t;

/// Bijective map between opaque string ids and dense indices.
/// Indices are assigned in insertion order.
class IdIndex {
 public:
  IdIndex() = default;

  /// Builds an index over the sorted, deduplicated ids.
  static IdIndex from_ids(std::vector<std::string> ids) {
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    IdIndex index;
    for (auto& id : ids) index.insert(id);
    return index;
  }

  std::size_t insert(const std::string& id) {
    auto [it, inserted] = lookup_.emplace(id, ids_.size());
    if (inserted) ids_.push_back(id);
    return it->second;
  }

  bool contains(const std::string& id) const { return lookup_.count(id) > 0; }

  std::size_t at(const std::string& id) const {
    auto it = lookup_.find(id);
    if (it == lookup_.end()) throw std::out_of_range("unknown id '" + id + "'");
    return it->second;
  }

  const std::string& id(std::size_t index) const { return ids_.at(index); }
  const std::vector<std::string>& ids() const { return ids_; }
  std::size_t size() const { return ids_.size(); }

  bool operator==(const IdIndex& other) const { return ids_ == other.ids_; }

 private:
  std::vector<std::string> ids_;
  std::unordered_map<std::string, std::size_t> lookup_;
};

struct ScoredCourse {
  CourseIndex course = 0;
  double score = 0.0;
};

/// Per-student list of (course, score) pairs produced by a recommender.
using ScoredRanking = std::vector<ScoredCourse>;

/// Sorts by descending score; ties broken by ascending course id.
inline void sort_ranking(ScoredRanking& ranking, const IdIndex& courses) {
  std::stable_sort(ranking.begin(), ranking.end(),
                   [&](const ScoredCourse& a, const ScoredCourse& b) {
                     if (a.score != b.score) return a.score > b.score;
                     return courses.id(a.course) < courses.id(b.course);
                   });
}

/// Shortest decimal text that round-trips to the same double.
inline std::string format_double(double value) {
  char buffer[32];
  auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, result.ptr);
}

inline double parse_double(std::string_view text) {
  double value = 0.0;
  auto result = std::from_chars(text.data(), text.data() + text.size(), value);
  if (result.ec != std::errc() || result.ptr != text.data() + text.size()) {
    throw ParseError("not a real number: '" + std::string(text) + "'");
  }
  return value;
}

inline long long parse_integer(std::string_view text) {
  long long value = 0;
  auto result = std::from_chars(text.data(), text.data() + text.size(), value);
  if (result.ec != std::errc() || result.ptr != text.data() + text.size()) {
    throw ParseError("not an integer: '" + std::string(text) + "'");
  }
  return value;
}

inline std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

inline std::string_view strip(std::string_view text) {
  while (!text.empty() && (text.back() == '\r' || text.back() == ' ' || text.back() == '\t')) {
    text.remove_suffix(1);
  }
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  return text;
}

}  // namespace ocrank
