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
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "ocrank/dataset.hpp"
#include "ocrank/types.hpp"

namespace ocrank {

struct Edge {
  CourseIndex target = 0;
  double weight = 0.0;

  bool operator==(const Edge&) const = default;
};

/// Directed weighted course graph. An edge f -> g carries the share of
/// year-to-year transitions out of f that land on g.
class TransitionNetwork {
 public:
  TransitionNetwork() = default;
  TransitionNetwork(IdIndex courses, std::vector<std::vector<Edge>> out_edges)
      : courses_(std::move(courses)), out_(std::move(out_edges)) {
    if (out_.size() != courses_.size()) {
      throw std::invalid_argument("edge table size does not match course count");
    }
    in_.assign(out_.size(), {});
    for (CourseIndex f = 0; f < out_.size(); ++f) {
      std::sort(out_[f].begin(), out_[f].end(),
                [](const Edge& a, const Edge& b) { return a.target < b.target; });
      for (const auto& e : out_[f]) {
        if (e.target >= out_.size()) throw std::out_of_range("edge target out of range");
        in_[e.target].push_back({f, e.weight});
      }
    }
  }

  std::size_t num_nodes() const { return out_.size(); }
  const IdIndex& courses() const { return courses_; }

  /// Out-edges of f, sorted by target index.
  const std::vector<Edge>& neighbors(CourseIndex f) const {
    if (f >= out_.size()) throw std::out_of_range("unknown course index " + std::to_string(f));
    return out_[f];
  }

  /// Edges pointing at g; Edge::target holds the source.
  const std::vector<Edge>& in_neighbors(CourseIndex g) const {
    if (g >= in_.size()) throw std::out_of_range("unknown course index " + std::to_string(g));
    return in_[g];
  }

  std::size_t num_edges() const {
    std::size_t n = 0;
    for (const auto& edges : out_) n += edges.size();
    return n;
  }

  double average_out_degree() const {
    return out_.empty() ? 0.0 : static_cast<double>(num_edges()) / static_cast<double>(out_.size());
  }

  /// Weight of f -> g, or 0 when absent.
  double weight(CourseIndex f, CourseIndex g) const {
    for (const auto& e : neighbors(f)) {
      if (e.target == g) return e.weight;
    }
    return 0.0;
  }

  const std::vector<std::vector<Edge>>& out_edges() const { return out_; }

  bool operator==(const TransitionNetwork& other) const {
    return courses_ == other.courses_ && out_ == other.out_;
  }

 private:
  IdIndex courses_;
  std::vector<std::vector<Edge>> out_;
  std::vector<std::vector<Edge>> in_;
};

/// Counts, per student, every (course at grade g, course at grade g + 1)
/// pair and normalizes each source's counts to sum to one. Courses in
/// `records` must all be present in `courses`.
inline TransitionNetwork build_network(const std::vector<RegistrationRecord>& records,
                                       const IdIndex& courses) {
  std::map<std::string, std::map<int, std::set<CourseIndex>>> by_student;
  for (const auto& r : records) {
    if (!courses.contains(r.course_id)) {
      throw ValidationError("course '" + r.course_id + "' missing from the course index");
    }
    by_student[r.student_id][r.grade_level].insert(courses.at(r.course_id));
  }
  std::vector<std::map<CourseIndex, long>> counts(courses.size());
  for (const auto& [student, years] : by_student) {
    for (const auto& [grade, taken] : years) {
      auto next = years.find(grade + 1);
      if (next == years.end()) continue;
      for (CourseIndex f : taken) {
        for (CourseIndex g : next->second) ++counts[f][g];
      }
    }
  }
  std::vector<std::vector<Edge>> out(courses.size());
  for (CourseIndex f = 0; f < courses.size(); ++f) {
    long total = 0;
    for (const auto& [g, n] : counts[f]) total += n;
    for (const auto& [g, n] : counts[f]) {
      out[f].push_back({g, static_cast<double>(n) / static_cast<double>(total)});
    }
  }
  return TransitionNetwork(courses, std::move(out));
}

/// Convenience overload indexing the courses found in `records`.
inline TransitionNetwork build_network(const std::vector<RegistrationRecord>& records) {
  std::vector<std::string> ids;
  for (const auto& r : records) ids.push_back(r.course_id);
  return build_network(records, IdIndex::from_ids(std::move(ids)));
}

/// Removes edges with weight below T. Surviving weights are left as they are.
inline TransitionNetwork apply_threshold(const TransitionNetwork& network, double T) {
  if (!(T >= 0.0 && T <= 1.0)) throw std::invalid_argument("threshold must lie in [0, 1]");
  std::vector<std::vector<Edge>> out(network.num_nodes());
  for (CourseIndex f = 0; f < network.num_nodes(); ++f) {
    for (const auto& e : network.neighbors(f)) {
      if (e.weight >= T) out[f].push_back(e);
    }
  }
  return TransitionNetwork(network.courses(), std::move(out));
}

/// Edge list: `source<TAB>target<TAB>weight`, weights at round-trip precision.
inline void write_network(std::ostream& out, const TransitionNetwork& network) {
  const auto& ids = network.courses();
  for (CourseIndex f = 0; f < network.num_nodes(); ++f) {
    for (const auto& e : network.neighbors(f)) {
      out << ids.id(f) << '\t' << ids.id(e.target) << '\t' << format_double(e.weight) << '\n';
    }
  }
}

/// Reads an edge list over a known course index.
inline TransitionNetwork read_network(std::istream& in, const IdIndex& courses) {
  std::vector<std::vector<Edge>> out(courses.size());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto text = strip(line);
    if (text.empty()) continue;
    auto fields = split(text, '\t');
    if (fields.size() != 3) {
      throw ParseError("edge list line " + std::to_string(line_no) + ": expected 3 fields");
    }
    std::string source(fields[0]);
    std::string target(fields[1]);
    if (!courses.contains(source) || !courses.contains(target)) {
      throw ValidationError("edge list line " + std::to_string(line_no) + ": unknown course");
    }
    double w = parse_double(fields[2]);
    if (!(w > 0.0 && w <= 1.0)) {
      throw ValidationError("edge list line " + std::to_string(line_no) + ": weight outside (0, 1]");
    }
    out[courses.at(source)].push_back({courses.at(target), w});
  }
  return TransitionNetwork(courses, std::move(out));
}

}  // namespace ocrank
