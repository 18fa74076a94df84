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
#include <map>
#include <string>
#include <vector>

#include "ocrank/dataset.hpp"
#include "ocrank/types.hpp"

namespace ocrank {

/// Registration count of every course in `courses` over `records`.
inline std::vector<double> popularity_scores(const std::vector<RegistrationRecord>& records,
                                             const IdIndex& courses) {
  std::vector<double> counts(courses.size(), 0.0);
  for (const auto& r : records) {
    if (courses.contains(r.course_id)) counts[courses.at(r.course_id)] += 1.0;
  }
  return counts;
}

/// Candidates ranked by historical registration count, ties by course id.
inline ScoredRanking popularity_rank(const std::vector<RegistrationRecord>& records,
                                     const std::vector<CourseIndex>& candidates,
                                     const IdIndex& courses) {
  if (records.empty()) throw std::invalid_argument("popularity_rank: no records");
  auto counts = popularity_scores(records, courses);
  ScoredRanking ranking;
  for (CourseIndex c : candidates) ranking.push_back({c, counts.at(c)});
  sort_ranking(ranking, courses);
  return ranking;
}

enum class SimilarityKind { Intersection, Jaccard };

struct StudentProfile {
  std::string student_id;
  std::vector<CourseIndex> courses;  // sorted, unique

  static StudentProfile make(std::string id, std::vector<CourseIndex> courses) {
    std::sort(courses.begin(), courses.end());
    courses.erase(std::unique(courses.begin(), courses.end()), courses.end());
    return {std::move(id), std::move(courses)};
  }

  bool took(CourseIndex c) const { return std::binary_search(courses.begin(), courses.end(), c); }
};

inline double similarity(const StudentProfile& a, const StudentProfile& b, SimilarityKind kind) {
  std::size_t common = 0;
  auto ia = a.courses.begin();
  auto ib = b.courses.begin();
  while (ia != a.courses.end() && ib != b.courses.end()) {
    if (*ia < *ib) {
      ++ia;
    } else if (*ib < *ia) {
      ++ib;
    } else {
      ++common;
      ++ia;
      ++ib;
    }
  }
  if (kind == SimilarityKind::Intersection) return static_cast<double>(common);
  const std::size_t unite = a.courses.size() + b.courses.size() - common;
  return unite == 0 ? 0.0 : static_cast<double>(common) / static_cast<double>(unite);
}

/// score(s, c) = sum of sim(s', s) over seniors s' who took c.
inline double memory_score(const StudentProfile& target, const std::vector<StudentProfile>& seniors,
                           CourseIndex c, SimilarityKind kind) {
  double sum = 0.0;
  for (const auto& senior : seniors) {
    if (senior.took(c)) sum += similarity(senior, target, kind);
  }
  return sum;
}

/// memory_score for every course index in [0, num_courses).
inline std::vector<double> memory_scores(const StudentProfile& target,
                                         const std::vector<StudentProfile>& seniors,
                                         std::size_t num_courses, SimilarityKind kind) {
  std::vector<double> scores(num_courses, 0.0);
  for (const auto& senior : seniors) {
    const double sim = similarity(senior, target, kind);
    if (sim == 0.0) continue;
    for (CourseIndex c : senior.courses) {
      if (c < num_courses) scores[c] += sim;
    }
  }
  return scores;
}

/// Profiles of the graduated students of a partition: their full histories.
inline std::vector<StudentProfile> senior_profiles(const PartitionedDataset& ds) {
  std::map<std::string, std::vector<CourseIndex>> courses;
  for (const auto& r : ds.records) {
    if (ds.graduated_students.count(r.record.student_id)) {
      courses[r.record.student_id].push_back(r.course);
    }
  }
  std::vector<StudentProfile> out;
  for (auto& [id, taken] : courses) out.push_back(StudentProfile::make(id, std::move(taken)));
  return out;
}

}  // namespace ocrank
