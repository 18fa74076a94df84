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

#include <cmath>
#include <random>

#include <boost/math/distributions/binomial.hpp>
#include <gtest/gtest.h>

#include "ocrank/evaluation.hpp"
#include "ocrank/pipeline.hpp"
#include "oracles.hpp"

namespace ocrank {
namespace {

ScoredRanking ranking_of(const std::vector<double>& scores) {
  ScoredRanking r;
  for (std::size_t c = 0; c < scores.size(); ++c) r.push_back({c, scores[c]});
  return r;
}

TEST(Auc, Examples) {
  EXPECT_EQ(auc(ranking_of({3, 2, 1}), {0}), 1.0);
  EXPECT_EQ(auc(ranking_of({1, 1, 1, 1}), {0, 2}), 0.5);
  // positives score 4 and 2, negatives 3 and 1: three of four pairs right
  EXPECT_EQ(auc(ranking_of({4, 3, 2, 1}), {0, 2}), 0.75);
  EXPECT_FALSE(auc(ranking_of({1, 2}), {}).has_value());
  EXPECT_FALSE(auc(ranking_of({1, 2}), {0, 1}).has_value());
}

TEST(Auc, MatchesBruteForce) {
  std::mt19937_64 gen(21);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 2 + gen() % 99;
    std::vector<double> scores(n);
    std::vector<bool> positive(n);
    std::set<CourseIndex> pos;
    for (std::size_t c = 0; c < n; ++c) {
      scores[c] = static_cast<double>(gen() % 7);  // plenty of ties
      positive[c] = gen() % 3 == 0;
      if (positive[c]) pos.insert(c);
    }
    if (pos.empty() || pos.size() == n) continue;
    EXPECT_EQ(*auc(ranking_of(scores), pos), testing::brute_force_auc(scores, positive));
  }
}

TEST(Auc, InvariantUnderMonotoneMaps) {
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::vector<double> scores(40);
  for (double& s : scores) s = unit(gen);
  std::set<CourseIndex> pos{1, 5, 9, 20, 33};
  auto mapped = scores;
  for (double& s : mapped) s = std::exp(3.0 * s) + 7.0;
  EXPECT_EQ(auc(ranking_of(scores), pos), auc(ranking_of(mapped), pos));
  auto reversed = scores;
  for (double& s : reversed) s = -s;
  EXPECT_NEAR(*auc(ranking_of(reversed), pos), 1.0 - *auc(ranking_of(scores), pos), 1e-15);
}

class EvaluateTest : public ::testing::Test {
 protected:
  void SetUp() override {
    SynthConfig config;
    config.students_per_cohort = 200;
    config.courses = 60;
    config.courses_per_grade = 5;
    ds = prepare_split(generate_synthetic(config, 2), 2010);
    heldout = ds.heldout_by_student();
  }
  PartitionedDataset ds;
  std::map<StudentIndex, std::set<CourseIndex>> heldout;
};

TEST_F(EvaluateTest, OracleScoresArePerfect) {
  auto report = evaluate(
      [&](StudentIndex s) {
        std::vector<double> scores(ds.num_courses(), 0.0);
        for (CourseIndex c : heldout.at(s)) scores[c] = 1.0;
        return scores;
      },
      ds, heldout);
  ASSERT_FALSE(report.per_student_auc.empty());
  for (const auto& [id, value] : report.per_student_auc) EXPECT_EQ(value, 1.0) << id;
  EXPECT_EQ(report.mean_auc, 1.0);
}

TEST_F(EvaluateTest, ConstantScoresAreHalf) {
  auto report = evaluate([&](StudentIndex) { return std::vector<double>(ds.num_courses(), 2.0); }, ds, heldout);
  for (const auto& [id, value] : report.per_student_auc) EXPECT_EQ(value, 0.5);
}

TEST_F(EvaluateTest, RandomScoresAverageHalf) {
  Rng rng(77);
  auto report = evaluate(
      [&](StudentIndex) {
        std::vector<double> scores(ds.num_courses());
        for (double& v : scores) v = rng.uniform();
        return scores;
      },
      ds, heldout);
  EXPECT_EQ(report.per_student_auc.size(), 200u);
  EXPECT_NEAR(report.mean_auc, 0.5, 0.05);
}

TEST_F(EvaluateTest, MeanMatchesPerStudentValues) {
  auto model = train_single_stage(ds, Hyperparameters{.K = 4, .epochs = 3});
  auto report = evaluate(cf_recommender(model), ds, heldout);
  double sum = 0.0;
  for (const auto& [id, value] : report.per_student_auc) sum += value;
  EXPECT_NEAR(report.mean_auc, sum / static_cast<double>(report.per_student_auc.size()), 1e-15);
}

TEST_F(EvaluateTest, TakenCoursesAreNotCandidates) {
  // Taken courses scored highest must not matter.
  auto report = evaluate(
      [&](StudentIndex s) {
        std::vector<double> scores(ds.num_courses(), 0.0);
        for (CourseIndex c : ds.history(s)) scores[c] = 10.0;
        for (CourseIndex c : heldout.at(s)) scores[c] = 1.0;
        return scores;
      },
      ds, heldout);
  EXPECT_EQ(report.mean_auc, 1.0);
}

TEST_F(EvaluateTest, FailuresAreRecorded) {
  const auto victim = ds.student_index.at(*ds.current_students.begin());
  auto report = evaluate(
      [&](StudentIndex s) {
        if (s == victim) throw ValidationError("cold");
        return std::vector<double>(ds.num_courses(), 0.0);
      },
      ds, heldout);
  EXPECT_EQ(report.failures.size(), 1u);
  EXPECT_EQ(report.per_student_auc.size(), 199u);
  EXPECT_EQ(report.num_skipped, 1);
}

TEST(PairedTest, IdenticalSamples) {
  std::vector<double> a{0.6, 0.7, 0.8, 0.9};
  auto r = paired_test(a, a);
  EXPECT_EQ(r.t_p_value, 1.0);
  EXPECT_EQ(r.sign_p_value, 1.0);
}

TEST(PairedTest, ConstantImprovement) {
  std::vector<double> a(30), b(30);
  for (int k = 0; k < 30; ++k) {
    a[k] = 0.5 + 0.01 * k;
    b[k] = a[k] + 0.1;
  }
  auto r = paired_test(a, b);
  EXPECT_EQ(r.sign_p_value, std::ldexp(1.0, -30));
  EXPECT_LT(r.t_p_value, 1e-12);
}

TEST(PairedTest, ZeroVarianceDifferences) {
  std::vector<double> a(30, 0.5), b(30, 0.6);
  auto r = paired_test(a, b);
  EXPECT_EQ(r.t_p_value, 0.0);
  EXPECT_EQ(r.sign_p_value, std::ldexp(1.0, -30));
  auto worse = paired_test(b, a);
  EXPECT_EQ(worse.t_p_value, 1.0);
  EXPECT_EQ(worse.sign_p_value, 1.0);
}

TEST(PairedTest, KnownTValue) {
  // differences 1, 2, 3: mean 2, sd 1, t = 2 sqrt(3) on 2 degrees of freedom
  // one-sided p = (1 - t / sqrt(t^2 + 2)) / 2
  auto r = paired_test({0, 0, 0}, {1, 2, 3});
  const double t = 2.0 * std::sqrt(3.0);
  EXPECT_NEAR(r.t_p_value, 0.5 * (1.0 - t / std::sqrt(t * t + 2.0)), 1e-12);
  EXPECT_EQ(r.sign_p_value, 0.125);
}

TEST(PairedTest, SignTestDropsZeros) {
  auto r = paired_test({0, 0, 0, 0}, {1, 1, 0, -1});
  // 3 nonzero, 2 positive: P(X >= 2) = 4 / 8
  EXPECT_EQ(r.sign_p_value, 0.5);
}

TEST(PairedTest, RejectsBadInput) {
  EXPECT_THROW(paired_test({1, 2}, {1}), std::invalid_argument);
  EXPECT_THROW(paired_test({1}, {1}), std::invalid_argument);
}

TEST(BinomialTail, ExactAndLarge) {
  EXPECT_EQ(binomial_upper_tail(30, 30), std::ldexp(1.0, -30));
  EXPECT_EQ(binomial_upper_tail(4, 2), 11.0 / 16.0);
  EXPECT_EQ(binomial_upper_tail(10, 0), 1.0);
  EXPECT_EQ(binomial_upper_tail(10, 11), 0.0);
  EXPECT_NEAR(binomial_upper_tail(61, 31), 0.5, 1e-15);
  EXPECT_NEAR(binomial_upper_tail(101, 51), 0.5, 1e-12);
  boost::math::binomial_distribution<double> dist(62.0, 0.5);
  for (std::uint64_t k : {1, 20, 31, 40, 62}) {
    const double expected = boost::math::cdf(boost::math::complement(dist, static_cast<double>(k) - 1.0));
    EXPECT_NEAR(binomial_upper_tail(62, k), expected, 1e-12 * expected) << k;
  }
}

}  // namespace
}  // namespace ocrank
