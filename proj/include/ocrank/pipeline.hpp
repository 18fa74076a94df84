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
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ocrank/baselines.hpp"
#include "ocrank/bprmf.hpp"
#include "ocrank/dataset.hpp"
#include "ocrank/ensemble.hpp"
#include "ocrank/evaluation.hpp"
#include "ocrank/io.hpp"
#include "ocrank/ppr.hpp"
#include "ocrank/transition_network.hpp"
#include "ocrank/two_stage.hpp"

namespace ocrank {

// ---------------------------------------------------------------------------
// Data preparation

struct SplitOptions {
  ClassifyOptions classify;
  PartitionOptions partition;
  /// Drop cohorts that entered after the target (keeps the test cohort out of
  /// a validation split).
  bool drop_later_cohorts = false;
};

/// Classifies courses on everything except the target's held-out year, then
/// partitions.
inline PartitionedDataset prepare_split(const std::vector<RegistrationRecord>& records,
                                        std::optional<int> target_cohort,
                                        const SplitOptions& options = {}) {
  std::vector<RegistrationRecord> input;
  std::vector<RegistrationRecord> visible;
  for (const auto& r : records) {
    if (options.drop_later_cohorts && target_cohort && r.cohort_year > *target_cohort) continue;
    input.push_back(r);
    const bool heldout = target_cohort && r.cohort_year == *target_cohort &&
                         r.grade_level == options.partition.max_grade;
    if (!heldout) visible.push_back(r);
  }
  ClassifyOptions classify = options.classify;
  classify.max_grade = options.partition.max_grade;
  return partition(input, classify_courses(visible, classify), target_cohort, options.partition);
}

/// Transition network over the observed history of a split, thresholded at T.
inline TransitionNetwork split_network(const PartitionedDataset& ds, double threshold) {
  return apply_threshold(build_network(ds.observed_records(), ds.course_index), threshold);
}

// ---------------------------------------------------------------------------
// Recommenders

inline Recommender cf_recommender(const FactorModel& model) {
  return [&model](StudentIndex s) {
    std::vector<double> scores(model.num_courses());
    for (CourseIndex c = 0; c < model.num_courses(); ++c) scores[c] = score(model, s, c);
    return scores;
  };
}

inline Recommender popularity_recommender(const PartitionedDataset& ds) {
  auto counts = popularity_scores(ds.observed_records(), ds.course_index);
  return [counts](StudentIndex) { return counts; };
}

inline Recommender memory_recommender(const PartitionedDataset& ds, SimilarityKind kind) {
  auto seniors = senior_profiles(ds);
  return [&ds, seniors = std::move(seniors), kind](StudentIndex s) {
    auto history = ds.history(s);
    auto target = StudentProfile::make(ds.student_index.id(s), {history.begin(), history.end()});
    return memory_scores(target, seniors, ds.num_courses(), kind);
  };
}

/// PPR mass of every course; the network must be indexed like the dataset.
inline Recommender ppr_recommender(const TransitionNetwork& network, const PartitionedDataset& ds,
                                   double gamma, bool full_history = false) {
  auto observed = ds.observed_records();
  std::map<std::string, std::vector<RegistrationRecord>> by_student;
  for (const auto& r : observed) by_student[r.student_id].push_back(r);
  return [&network, &ds, by_student = std::move(by_student), gamma, full_history](StudentIndex s) {
    const auto& id = ds.student_index.id(s);
    auto it = by_student.find(id);
    if (it == by_student.end()) throw ValidationError("student '" + id + "' has no history");
    PprQuery query;
    query.gamma = gamma;
    for (const auto& course : restart_courses(it->second, id, full_history)) {
      if (network.courses().contains(course)) query.restart_set.push_back(network.courses().at(course));
    }
    if (query.restart_set.empty()) {
      throw ValidationError("student '" + id + "' has no current course in the network");
    }
    return personalized_pagerank(network, query).mass;
  };
}

/// Scores of every untaken course for each current student.
inline ScoreTable score_table(const Recommender& recommender, const PartitionedDataset& ds) {
  ScoreTable table;
  for (const auto& id : ds.current_students) {
    const StudentIndex s = ds.student_index.at(id);
    auto scores = recommender(s);
    auto taken = ds.history(s);
    auto& row = table[id];
    for (CourseIndex c = 0; c < ds.num_courses(); ++c) {
      if (!taken.count(c)) row.emplace_back(ds.course_index.id(c), scores.at(c));
    }
  }
  return table;
}

// ---------------------------------------------------------------------------
// Ensemble over score tables

namespace detail {

struct StudentFeatures {
  IdIndex courses;
  std::vector<FeatureVector> features;
};

inline StudentFeatures student_features(const std::vector<std::pair<std::string, double>>& cf_row,
                                        const std::vector<std::pair<std::string, double>>* ppr_row) {
  StudentFeatures out;
  ScoredRanking cf, ppr;
  std::vector<CourseIndex> candidates;
  for (const auto& [course, value] : cf_row) {
    const CourseIndex c = out.courses.insert(course);
    cf.push_back({c, value});
    candidates.push_back(c);
  }
  if (ppr_row) {
    for (const auto& [course, value] : *ppr_row) {
      if (out.courses.contains(course)) ppr.push_back({out.courses.at(course), value});
    }
  }
  out.features = build_features(cf, ppr, candidates);
  return out;
}

}  // namespace detail

/// One (positive, sampled negative) feature pair per held-out registration.
/// Candidates are the courses in the CF table; PPR masses missing from the
/// PPR table count as zero.
inline std::vector<RankingPair> make_ranking_pairs(const ScoreTable& cf, const ScoreTable& ppr,
                                                   const std::vector<RegistrationRecord>& truth,
                                                   std::uint64_t seed) {
  std::map<std::string, std::set<std::string>> positives;
  for (const auto& r : truth) positives[r.student_id].insert(r.course_id);
  Rng rng = make_stream(seed, "ranksvm-pairs");
  std::vector<RankingPair> pairs;
  for (const auto& [student, courses] : positives) {
    auto cf_it = cf.find(student);
    if (cf_it == cf.end() || cf_it->second.empty()) continue;
    auto ppr_it = ppr.find(student);
    auto sf = detail::student_features(cf_it->second, ppr_it == ppr.end() ? nullptr : &ppr_it->second);
    std::vector<const FeatureVector*> pos, neg;
    for (const auto& f : sf.features) {
      (courses.count(sf.courses.id(f.course)) ? pos : neg).push_back(&f);
    }
    if (neg.empty()) continue;
    for (const auto* p : pos) {
      pairs.push_back({p->x, neg[rng.below(neg.size())]->x});
    }
  }
  return pairs;
}

/// Ensemble scores over the CF table's candidates.
inline ScoreTable ensemble_table(const RankSvmModel& model, const ScoreTable& cf, const ScoreTable& ppr) {
  if (!model.trained) throw std::logic_error("ensemble_table: model is not trained");
  ScoreTable out;
  for (const auto& [student, row] : cf) {
    if (row.empty()) continue;
    auto ppr_it = ppr.find(student);
    auto sf = detail::student_features(row, ppr_it == ppr.end() ? nullptr : &ppr_it->second);
    auto& dest = out[student];
    for (const auto& f : sf.features) dest.emplace_back(sf.courses.id(f.course), model.decision(f.x));
  }
  return out;
}

// ---------------------------------------------------------------------------
// End-to-end experiment on synthetic data

struct ExperimentConfig {
  SynthConfig synth;
  Hyperparameters hyper;
  double threshold = 0.03;
  double gamma = 0.7;
  SplitOptions split;
  double ranksvm_c = 1.0;
  int ranksvm_epochs = 200;
  TrainOptions train;
};

struct ExperimentResult {
  /// Method name -> test-cohort report. Names: popularity, intersection,
  /// jaccard, ppr, bpr, two-stage, two-stage-cdr, ensemble.
  std::map<std::string, EvaluationReport> reports;
  RankSvmModel ensemble;
  double average_out_degree = 0.0;  // pre-threshold, test split
};

/// Generates data with `seed`, holds out the last cohort's final year as the
/// test set and the previous cohort's final year as validation (ensemble
/// training), and evaluates every method on the test set.
inline ExperimentResult run_experiment(const ExperimentConfig& config, std::uint64_t seed) {
  if (config.synth.cohorts < 3) throw ValidationError("experiment needs at least three cohorts");
  auto records = generate_synthetic(config.synth, seed);
  const int test_cohort = config.synth.first_cohort_year + config.synth.cohorts - 1;
  const int validation_cohort = test_cohort - 1;
  Hyperparameters hyper = config.hyper;
  hyper.seed = seed;

  ExperimentResult result;

  // Validation split: ensemble weights.
  {
    SplitOptions options = config.split;
    options.drop_later_cohorts = true;
    auto ds = prepare_split(records, validation_cohort, options);
    auto network = split_network(ds, config.threshold);
    auto model = train_two_stage(ds, hyper, &network, config.train);
    auto cf = score_table(cf_recommender(model), ds);
    auto ppr = score_table(ppr_recommender(network, ds, config.gamma), ds);
    auto pairs = make_ranking_pairs(cf, ppr, ds.heldout, seed);
    result.ensemble = train_ranksvm(pairs, config.ranksvm_c, config.ranksvm_epochs, seed);
  }

  auto ds = prepare_split(records, test_cohort, config.split);
  auto full_network = build_network(ds.observed_records(), ds.course_index);
  result.average_out_degree = full_network.average_out_degree();
  auto network = apply_threshold(full_network, config.threshold);

  auto run = [&](const std::string& name, const Recommender& recommender) {
    auto table = score_table(recommender, ds);
    result.reports[name] = evaluate_scores(table, ds.heldout);
    return table;
  };
  run("popularity", popularity_recommender(ds));
  run("intersection", memory_recommender(ds, SimilarityKind::Intersection));
  run("jaccard", memory_recommender(ds, SimilarityKind::Jaccard));
  auto ppr = run("ppr", ppr_recommender(network, ds, config.gamma));

  auto bpr = train_single_stage(ds, hyper, nullptr, config.train);
  run("bpr", cf_recommender(bpr));
  auto two_stage = train_two_stage(ds, hyper, nullptr, config.train);
  run("two-stage", cf_recommender(two_stage));
  auto two_stage_cdr = train_two_stage(ds, hyper, &network, config.train);
  auto cf = run("two-stage-cdr", cf_recommender(two_stage_cdr));

  result.reports["ensemble"] = evaluate_scores(ensemble_table(result.ensemble, cf, ppr), ds.heldout);
  return result;
}

}  // namespace ocrank
