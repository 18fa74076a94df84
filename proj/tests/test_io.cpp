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

#include <sstream>

#include <gtest/gtest.h>

#include "ocrank/io.hpp"
#include "ocrank/pipeline.hpp"

namespace ocrank {
namespace {

TEST(ModelFile, RoundTripIsExact) {
  Hyperparameters h;
  h.K = 3;
  h.seed = 12;
  auto model = init_model(4, 5, h);
  model.student(2)[1] = 1.0 / 3.0;
  model.course(4)[0] = -6.02214076e23;
  auto students = IdIndex::from_ids({"s1", "s2", "s3", "s4"});
  auto courses = IdIndex::from_ids({"A", "B", "C", "D", "E"});
  std::stringstream buffer;
  write_model(buffer, model, students, courses);
  EXPECT_EQ(buffer.str().rfind("ocrank-model v1 4 5 3\n", 0), 0u);
  auto saved = read_model(buffer);
  EXPECT_EQ(saved.model, model);
  EXPECT_EQ(saved.students, students);
  EXPECT_EQ(saved.courses, courses);

  std::stringstream again;
  write_model(again, saved.model, saved.students, saved.courses);
  std::stringstream first;
  write_model(first, model, students, courses);
  EXPECT_EQ(again.str(), first.str());
}

TEST(ModelFile, RejectsBadInput) {
  for (const char* text : {"", "ocrank-model v2 1 1 1\n", "not-a-model v1 1 1 1\n", "ocrank-model v1 0 1 1\n",
                           "ocrank-model v1 1 1 2\n0.5\n0.5 0.5\ns\t0\nc\t0\n",
                           "ocrank-model v1 1 1 1\n0.5\n0.5\ns\t0\n"}) {
    std::istringstream in(text);
    EXPECT_THROW(read_model(in), ParseError) << text;
  }
  auto model = init_model(1, 1, Hyperparameters{.K = 1});
  std::stringstream out;
  EXPECT_THROW(write_model(out, model, IdIndex::from_ids({"a", "b"}), IdIndex::from_ids({"c"})),
               std::invalid_argument);
}

TEST(ScoreFile, RoundTrip) {
  ScoreTable table{{"s1", {{"B", 0.25}, {"A", -1e-300}}}, {"s2", {{"C", 3.0}}}};
  std::stringstream buffer;
  write_scores(buffer, table);
  EXPECT_EQ(read_scores(buffer), table);
  std::istringstream bad("s1\tA\n");
  EXPECT_THROW(read_scores(bad), ParseError);
  std::istringstream not_number("s1\tA\tx\n");
  EXPECT_THROW(read_scores(not_number), ParseError);
}

TEST(EvaluateScores, AgreesWithInProcessEvaluation) {
  auto ds = prepare_split(generate_synthetic(SynthConfig{}, 6), 2010);
  auto model = train_two_stage(ds, Hyperparameters{.epochs = 3});
  auto recommender = cf_recommender(model);
  auto direct = evaluate(recommender, ds, ds.heldout_by_student());
  std::stringstream buffer;
  write_scores(buffer, score_table(recommender, ds));
  auto via_file = evaluate_scores(read_scores(buffer), ds.heldout);
  EXPECT_EQ(via_file.per_student_auc, direct.per_student_auc);
  EXPECT_EQ(via_file.mean_auc, direct.mean_auc);
}

TEST(EvaluateScores, MissingStudentsAreFailures) {
  ScoreTable table{{"s1", {{"A", 1.0}, {"B", 0.0}}}};
  std::vector<RegistrationRecord> truth{{"s1", "A", 2010, 4}, {"s2", "A", 2010, 4}};
  auto report = evaluate_scores(table, truth);
  EXPECT_EQ(report.per_student_auc.at("s1"), 1.0);
  EXPECT_EQ(report.failures.count("s2"), 1u);
  EXPECT_EQ(report.num_skipped, 1);
}

}  // namespace
}  // namespace ocrank
