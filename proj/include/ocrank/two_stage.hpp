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
#include <functional>
#include <limits>
#include <memory>
#include <set>
#include <stdexcept>
#include <utility>
#include <vector>

#include "ocrank/bprmf.hpp"
#include "ocrank/dataset.hpp"
#include "ocrank/transition_network.hpp"

namespace ocrank {

enum class Stage { First, Second };

/// Positives and sampling scopes for both stages of training.
struct TrainingPlan {
  std::vector<Positive> stage1_positives;  // FG + AG + FC
  std::vector<Positive> stage2_positives;  // FC
  SamplingScope stage1_scope;
  SamplingScope stage2_scope;
};

inline TrainingPlan make_training_plan(const PartitionedDataset& ds) {
  const std::size_t S = ds.num_students();
  const std::size_t C = ds.num_courses();
  TrainingPlan plan;

  std::set<std::pair<StudentIndex, CourseIndex>> all_pairs;
  std::set<std::pair<StudentIndex, CourseIndex>> fc_pairs;
  for (const auto& r : ds.records) {
    all_pairs.emplace(r.student, r.course);
    if (r.block == Block::FC) fc_pairs.emplace(r.student, r.course);
  }
  for (const auto& [s, c] : all_pairs) plan.stage1_positives.push_back({s, c});
  for (const auto& [s, c] : fc_pairs) plan.stage2_positives.push_back({s, c});

  std::vector<CourseIndex> every_course(C);
  std::vector<CourseIndex> fundamental;
  for (CourseIndex c = 0; c < C; ++c) {
    every_course[c] = c;
    if (!ds.is_advanced(c)) fundamental.push_back(c);
  }

  // Stage 1: graduated students sample from every course; current students
  // never from advanced courses, which would be AR entries.
  auto& s1 = plan.stage1_scope;
  s1.pools = {every_course, fundamental};
  s1.pool_of_student.resize(S);
  for (StudentIndex s = 0; s < S; ++s) s1.pool_of_student[s] = ds.is_current(s) ? 1 : 0;
  s1.positives.assign(S, std::vector<char>(C, 0));
  for (const auto& p : plan.stage1_positives) s1.positives[p.s][p.i] = 1;
  s1.update_courses = true;

  auto& s2 = plan.stage2_scope;
  s2.pools = {fundamental};
  s2.pool_of_student.assign(S, 0);
  s2.positives.assign(S, std::vector<char>(C, 0));
  for (const auto& p : plan.stage2_positives) s2.positives[p.s][p.i] = 1;
  s2.update_courses = false;
  return plan;
}

/// Called after every epoch; return false to stop the current stage early.
using EpochHook = std::function<bool(Stage, int epoch, double epoch_loss, const FactorModel&)>;

struct TrainOptions {
  /// Stage-2 epochs and learning rate; negative means "same as stage 1".
  int stage2_epochs = -1;
  double stage2_alpha = -1.0;
  /// Reinitialize current students' P rows before stage 2 instead of
  /// continuing from their stage-1 values.
  bool reinit_current = false;
  CdrGradient cdr_form = CdrGradient::Symmetric;
  TripleObserver observer;
  EpochHook on_epoch;
};

/// Early stopping on a validation metric that should increase (e.g. AUC):
/// stops a stage after `patience` epochs without improvement.
inline EpochHook make_plateau_stopper(std::function<double(const FactorModel&)> metric,
                                      int patience = 3) {
  struct State {
    Stage stage = Stage::First;
    double best = -std::numeric_limits<double>::infinity();
    int stale = 0;
  };
  auto state = std::make_shared<State>();
  return [state, metric = std::move(metric), patience](Stage stage, int, double,
                                                       const FactorModel& model) {
    if (stage != state->stage) *state = State{stage};
    double value = metric(model);
    if (value > state->best) {
      state->best = value;
      state->stale = 0;
    } else if (++state->stale >= patience) {
      return false;
    }
    return true;
  };
}

namespace detail {

inline void run_stage(FactorModel& model, Stage stage, int epochs,
                      const std::vector<Positive>& positives, const SamplingScope& scope,
                      const CdrTerm& cdr, const TrainOptions& options) {
  if (epochs <= 0 || positives.empty()) return;
  auto streams = TrainingStreams::from_seed(model.hyper.seed,
                                            stage == Stage::First ? "stage1" : "stage2");
  for (int epoch = 0; epoch < epochs; ++epoch) {
    double epoch_loss = sgd_epoch(model, positives, scope, cdr, streams, options.observer);
    if (options.on_epoch && !options.on_epoch(stage, epoch, epoch_loss, model)) break;
  }
}

inline CdrTerm cdr_for(const TransitionNetwork* network, const FactorModel& model,
                       const TrainOptions& options) {
  if (network && network->num_nodes() != model.num_courses()) {
    throw std::invalid_argument("network and dataset disagree on the number of courses");
  }
  return {network, options.cdr_form};
}

}  // namespace detail

/// One BPR-MF stage over FG + AG + FC, with AR excluded from negatives.
inline FactorModel train_single_stage(const PartitionedDataset& ds, const Hyperparameters& hyper,
                                      const TransitionNetwork* network = nullptr,
                                      const TrainOptions& options = {}) {
  auto model = init_model(ds.num_students(), ds.num_courses(), hyper);
  auto plan = make_training_plan(ds);
  detail::run_stage(model, Stage::First, hyper.epochs, plan.stage1_positives, plan.stage1_scope,
                    detail::cdr_for(network, model, options), options);
  return model;
}

/// Stage 1 learns P and Q on FG + AG + FC (with the dependency penalty when a
/// network is given); stage 2 freezes Q and refits the current students'
/// rows of P on FC alone.
inline FactorModel train_two_stage(const PartitionedDataset& ds, const Hyperparameters& hyper,
                                   const TransitionNetwork* network = nullptr,
                                   const TrainOptions& options = {}) {
  auto plan = make_training_plan(ds);
  if (plan.stage2_positives.empty()) {
    throw ValidationError("two-stage training needs current students with FC records");
  }
  auto model = init_model(ds.num_students(), ds.num_courses(), hyper);
  detail::run_stage(model, Stage::First, hyper.epochs, plan.stage1_positives, plan.stage1_scope,
                    detail::cdr_for(network, model, options), options);

  if (options.reinit_current) {
    Rng rng = make_stream(hyper.seed, "init/stage2");
    for (StudentIndex s = 0; s < ds.num_students(); ++s) {
      if (!ds.is_current(s)) continue;
      for (double& v : model.student(s)) v = rng.uniform(-0.01, 0.01);
    }
  }

  const double stage1_alpha = model.hyper.alpha;
  if (options.stage2_alpha > 0.0) model.hyper.alpha = options.stage2_alpha;
  const int stage2_epochs = options.stage2_epochs >= 0 ? options.stage2_epochs : hyper.epochs;
  detail::run_stage(model, Stage::Second, stage2_epochs, plan.stage2_positives, plan.stage2_scope,
                    CdrTerm{}, options);
  model.hyper.alpha = stage1_alpha;
  return model;
}

}  // namespace ocrank
