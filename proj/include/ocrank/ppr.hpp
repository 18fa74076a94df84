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

#include <cmath>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "ocrank/dataset.hpp"
#include "ocrank/transition_network.hpp"
#include "ocrank/types.hpp"

namespace ocrank {

struct PprQuery {
  std::vector<CourseIndex> restart_set;
  double gamma = 0.7;  // probability of following an edge
  double tolerance = 1e-10;
  int max_iterations = 1000;
};

struct PprDistribution {
  std::vector<double> mass;  // indexed by course
  bool converged = false;
  int iterations = 0;
  double last_change = 0.0;  // L1 change of the final iteration
};

/// Stationary distribution of a walk that follows out-edges with probability
/// gamma (proportionally to their weights) and otherwise restarts uniformly in
/// the restart set. Sinks send their mass to the restart set.
///
/// Power iteration on pi = gamma * M pi + (1 - gamma) * r until the L1 change
/// drops below the tolerance.
inline PprDistribution personalized_pagerank(const TransitionNetwork& network,
                                             const PprQuery& query) {
  const std::size_t n = network.num_nodes();
  if (n == 0) throw std::invalid_argument("personalized_pagerank: empty network");
  if (query.restart_set.empty()) throw std::invalid_argument("personalized_pagerank: empty restart set");
  if (!(query.gamma > 0.0 && query.gamma < 1.0)) {
    throw std::invalid_argument("personalized_pagerank: gamma must lie in (0, 1)");
  }
  if (!(query.tolerance > 0.0) || query.max_iterations < 1) {
    throw std::invalid_argument("personalized_pagerank: bad stopping criteria");
  }

  std::vector<double> restart(n, 0.0);
  std::set<CourseIndex> unique_restart(query.restart_set.begin(), query.restart_set.end());
  for (CourseIndex c : unique_restart) {
    if (c >= n) throw std::out_of_range("restart course " + std::to_string(c) + " not in network");
    restart[c] = 1.0 / static_cast<double>(unique_restart.size());
  }

  // Per-step normalization: thresholded out-weights need not sum to one.
  std::vector<double> out_total(n, 0.0);
  for (CourseIndex f = 0; f < n; ++f) {
    for (const auto& e : network.neighbors(f)) out_total[f] += e.weight;
  }

  const double gamma = query.gamma;
  PprDistribution result;
  std::vector<double> pi = restart;
  std::vector<double> next(n);
  for (int it = 1; it <= query.max_iterations; ++it) {
    double dangling = 0.0;
    std::fill(next.begin(), next.end(), 0.0);
    for (CourseIndex f = 0; f < n; ++f) {
      if (pi[f] == 0.0) continue;
      if (out_total[f] <= 0.0) {
        dangling += pi[f];
        continue;
      }
      const double share = gamma * pi[f] / out_total[f];
      for (const auto& e : network.neighbors(f)) next[e.target] += share * e.weight;
    }
    const double teleport = (1.0 - gamma) + gamma * dangling;
    double change = 0.0;
    for (CourseIndex v = 0; v < n; ++v) {
      next[v] += teleport * restart[v];
      change += std::abs(next[v] - pi[v]);
    }
    pi.swap(next);
    result.iterations = it;
    result.last_change = change;
    if (change < query.tolerance) {
      result.converged = true;
      break;
    }
  }
  result.mass = std::move(pi);
  return result;
}

/// ||pi - (gamma M pi + (1 - gamma) r)||_1 for a candidate distribution.
inline double ppr_residual(const TransitionNetwork& network, const PprQuery& query,
                           const std::vector<double>& pi) {
  const std::size_t n = network.num_nodes();
  std::vector<double> restart(n, 0.0);
  std::set<CourseIndex> unique_restart(query.restart_set.begin(), query.restart_set.end());
  for (CourseIndex c : unique_restart) restart.at(c) = 1.0 / static_cast<double>(unique_restart.size());
  std::vector<double> image(n, 0.0);
  double dangling = 0.0;
  for (CourseIndex f = 0; f < n; ++f) {
    double total = 0.0;
    for (const auto& e : network.neighbors(f)) total += e.weight;
    if (total <= 0.0) {
      dangling += pi[f];
      continue;
    }
    for (const auto& e : network.neighbors(f)) image[e.target] += query.gamma * pi[f] * e.weight / total;
  }
  double residual = 0.0;
  for (CourseIndex v = 0; v < n; ++v) {
    image[v] += ((1.0 - query.gamma) + query.gamma * dangling) * restart[v];
    residual += std::abs(pi[v] - image[v]);
  }
  return residual;
}

/// Restart courses for a student: the courses of their latest observed grade,
/// or their whole history when `full_history` is set.
inline std::vector<std::string> restart_courses(const std::vector<RegistrationRecord>& records,
                                                const std::string& student_id,
                                                bool full_history = false) {
  int latest = 0;
  for (const auto& r : records) {
    if (r.student_id == student_id) latest = std::max(latest, r.grade_level);
  }
  std::set<std::string> courses;
  for (const auto& r : records) {
    if (r.student_id != student_id) continue;
    if (full_history || r.grade_level == latest) courses.insert(r.course_id);
  }
  return {courses.begin(), courses.end()};
}

struct PprRanking {
  ScoredRanking ranking;              // non-restart courses, descending mass
  std::vector<std::string> dropped;   // restart courses unknown to the network
  bool converged = false;
};

/// Ranks every non-restart course of the network by its stationary mass when
/// the walk restarts from the student's current courses.
inline PprRanking rank_by_ppr(const TransitionNetwork& network,
                              const std::vector<std::string>& current_courses, double gamma = 0.7,
                              double tolerance = 1e-10, int max_iterations = 1000) {
  PprRanking out;
  PprQuery query;
  query.gamma = gamma;
  query.tolerance = tolerance;
  query.max_iterations = max_iterations;
  for (const auto& id : current_courses) {
    if (network.courses().contains(id)) {
      query.restart_set.push_back(network.courses().at(id));
    } else {
      out.dropped.push_back(id);
    }
  }
  if (query.restart_set.empty()) {
    throw ValidationError("none of the student's current courses is in the transition network");
  }
  auto dist = personalized_pagerank(network, query);
  out.converged = dist.converged;
  std::set<CourseIndex> restart(query.restart_set.begin(), query.restart_set.end());
  for (CourseIndex c = 0; c < network.num_nodes(); ++c) {
    if (!restart.count(c)) out.ranking.push_back({c, dist.mass[c]});
  }
  sort_ranking(out.ranking, network.courses());
  return out;
}

}  // namespace ocrank
