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
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/distributions/binomial.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "ocrank/dataset.hpp"
#include "ocrank/types.hpp"

namespace ocrank {

/// Share of (positive, negative) pairs ordered correctly, ties counting one
/// half. Returns nullopt when the ranking has no positives or no negatives.
inline std::optional<double> auc(const ScoredRanking& ranking, const std::set<CourseIndex>& positives) {
  std::vector<std::pair<double, bool>> items;
  items.reserve(ranking.size());
  std::uint64_t num_pos = 0;
  for (const auto& entry : ranking) {
    const bool is_pos = positives.count(entry.course) > 0;
    num_pos += is_pos;
    items.emplace_back(entry.score, is_pos);
  }
  const std::uint64_t num_neg = items.size() - num_pos;
  if (num_pos == 0 || num_neg == 0) return std::nullopt;

  // Ascending scores; for each tie group, positives beat every negative below
  // the group and tie with the group's negatives.
  std::sort(items.begin(), items.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  std::uint64_t twice_wins = 0;
  std::uint64_t negatives_below = 0;
  for (std::size_t lo = 0; lo < items.size();) {
    std::size_t hi = lo;
    std::uint64_t group_pos = 0;
    std::uint64_t group_neg = 0;
    while (hi < items.size() && items[hi].first == items[lo].first) {
      (items[hi].second ? group_pos : group_neg) += 1;
      ++hi;
    }
    twice_wins += group_pos * (2 * negatives_below + group_neg);
    negatives_below += group_neg;
    lo = hi;
  }
  return (static_cast<double>(twice_wins) / 2.0) /
         (static_cast<double>(num_pos) * static_cast<double>(num_neg));
}

struct EvaluationReport {
  std::map<std::string, double> per_student_auc;
  double mean_auc = 0.0;
  int num_skipped = 0;
  std::map<std::string, std::string> failures;  // student -> error message
};

inline double mean_of(const std::map<std::string, double>& values) {
  if (values.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& [id, v] : values) sum += v;
  return sum / static_cast<double>(values.size());
}

/// A recommender returns one score per course index for a student.
using Recommender = std::function<std::vector<double>(StudentIndex)>;

struct EvaluateOptions {
  /// Drop courses the student already took from the candidate list.
  bool exclude_taken = true;
};

/// Per-student AUC of `recommender` against held-out registrations, over the
/// dataset's current students.
inline EvaluationReport evaluate(const Recommender& recommender, const PartitionedDataset& ds,
                                 const std::map<StudentIndex, std::set<CourseIndex>>& heldout,
                                 const EvaluateOptions& options = {}) {
  EvaluationReport report;
  std::map<StudentIndex, std::set<CourseIndex>> taken;
  if (options.exclude_taken) {
    for (const auto& r : ds.records) taken[r.student].insert(r.course);
    for (const auto& r : ds.excluded_ar) {
      taken[ds.student_index.at(r.student_id)].insert(ds.course_index.at(r.course_id));
    }
  }
  for (const auto& id : ds.current_students) {
    const StudentIndex s = ds.student_index.at(id);
    auto truth = heldout.find(s);
    if (truth == heldout.end()) {
      ++report.num_skipped;
      continue;
    }
    std::vector<double> scores;
    try {
      scores = recommender(s);
      if (scores.size() != ds.num_courses()) throw std::runtime_error("wrong number of scores");
    } catch (const std::exception& e) {
      report.failures[id] = e.what();
      ++report.num_skipped;
      continue;
    }
    ScoredRanking ranking;
    const auto& seen = taken[s];
    for (CourseIndex c = 0; c < ds.num_courses(); ++c) {
      if (!seen.count(c)) ranking.push_back({c, scores[c]});
    }
    auto value = auc(ranking, truth->second);
    if (!value) {
      ++report.num_skipped;
      continue;
    }
    report.per_student_auc[id] = *value;
  }
  report.mean_auc = mean_of(report.per_student_auc);
  return report;
}

struct PairedTestResult {
  double t_p_value = 1.0;
  double sign_p_value = 1.0;
  double mean_difference = 0.0;
  std::size_t n = 0;
};

/// P(X >= k) for X ~ Binomial(n, 1/2).
inline double binomial_upper_tail(std::uint64_t n, std::uint64_t k) {
  if (k == 0) return 1.0;
  if (k > n) return 0.0;
  if (n <= 62) {
    // Exact: Pascal's triangle row n, every entry below 2^62.
    std::vector<std::uint64_t> row{1};
    for (std::uint64_t i = 0; i < n; ++i) {
      row.push_back(0);
      for (std::size_t j = row.size() - 1; j > 0; --j) row[j] += row[j - 1];
    }
    std::uint64_t total = 0;
    for (std::uint64_t i = k; i <= n; ++i) total += row[i];
    return std::ldexp(static_cast<double>(total), -static_cast<int>(n));
  }
  boost::math::binomial_distribution<double> dist(static_cast<double>(n), 0.5);
  return boost::math::cdf(boost::math::complement(dist, static_cast<double>(k) - 1.0));
}

/// One-sided paired tests of mean(b - a) > 0: Student's t and the exact sign
/// test (zero differences dropped).
inline PairedTestResult paired_test(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("paired_test: samples differ in length");
  if (a.size() < 2) throw std::invalid_argument("paired_test: need at least two pairs");
  const std::size_t n = a.size();
  std::vector<double> diff(n);
  for (std::size_t k = 0; k < n; ++k) diff[k] = b[k] - a[k];

  PairedTestResult result;
  result.n = n;
  double mean = 0.0;
  for (double d : diff) mean += d;
  mean /= static_cast<double>(n);
  result.mean_difference = mean;

  std::uint64_t positive = 0;
  std::uint64_t nonzero = 0;
  bool all_equal = true;
  for (double d : diff) {
    if (d != 0.0) ++nonzero;
    if (d > 0.0) ++positive;
    if (d != diff[0]) all_equal = false;
  }
  if (nonzero == 0) return result;  // both p-values stay 1

  result.sign_p_value = binomial_upper_tail(nonzero, positive);

  double ss = 0.0;
  for (double d : diff) ss += (d - mean) * (d - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  if (all_equal || sd == 0.0) {
    // Zero variance: the sign of the common difference decides.
    result.t_p_value = mean > 0.0 ? 0.0 : 1.0;
  } else {
    const double t = mean / (sd / std::sqrt(static_cast<double>(n)));
    boost::math::students_t_distribution<double> dist(static_cast<double>(n - 1));
    result.t_p_value = boost::math::cdf(boost::math::complement(dist, t));
  }
  return result;
}

}  // namespace ocrank
