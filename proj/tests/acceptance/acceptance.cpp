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

// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any
// failure.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>

#include "../../tools/cli.hpp"
#include "ocrank/ocrank.hpp"
#include "oracles.hpp"

namespace {

using namespace ocrank;
namespace fs = std::filesystem;

struct Outcome {
  bool pass = true;
  std::string detail;
};

bool run_criterion(int id, const std::string& name, double limit_seconds,
                   const std::function<Outcome()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Outcome outcome;
  try {
    outcome = body();
  } catch (const std::exception& e) {
    outcome = {false, std::string("exception: ") + e.what()};
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (limit_seconds > 0 && seconds >= limit_seconds) {
    outcome.pass = false;
    outcome.detail += "; over the " + std::to_string(static_cast<int>(limit_seconds)) + " s budget";
  }
  std::cout << (outcome.pass ? "PASS" : "FAIL") << "  " << std::setw(2) << id << "  " << name << "  ("
            << std::fixed << std::setprecision(2) << seconds << " s)  " << outcome.detail << std::endl;
  return outcome.pass;
}

Outcome golden_network() {
  auto net = build_network(testing::worked_example_records());
  const auto& ids = net.courses();
  const std::vector<std::tuple<std::string, std::string, double>> expected{
      {"A", "B", 0.25}, {"A", "C", 0.5}, {"A", "D", 0.25}, {"B", "C", 1.0},
      {"C", "A", 0.25}, {"C", "B", 0.25}, {"C", "D", 0.5}, {"D", "B", 1.0}};
  Outcome o;
  if (net.num_edges() != expected.size()) {
    return {false, "edge count " + std::to_string(net.num_edges())};
  }
  double worst = 0.0;
  for (const auto& [f, g, w] : expected) {
    worst = std::max(worst, std::abs(net.weight(ids.at(f), ids.at(g)) - w));
  }
  o.pass = worst <= 1e-12;
  o.detail = "max weight error " + format_double(worst);
  return o;
}

Outcome gradient_check() {
  std::mt19937_64 gen(20240501);
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  double worst = 0.0;
  int instances = 0;
  for (int trial = 0; trial < 60; ++trial, ++instances) {
    const int K = 1 + trial % 5;
    const std::size_t S = 4, C = 6;
    FactorModel m(S, C, K);
    m.hyper.K = K;
    m.hyper.lambda = 0.01 + 0.1 * std::abs(coef(gen));
    m.hyper.beta = 0.01 + 0.5 * std::abs(coef(gen));
    for (StudentIndex s = 0; s < S; ++s) for (double& v : m.student(s)) v = coef(gen);
    for (CourseIndex c = 0; c < C; ++c) for (double& v : m.course(c)) v = coef(gen);
    const bool use_net = trial % 2 == 1;
    auto edges = testing::random_edges(gen, C, 0.35);
    auto net = testing::network_from_edges(C, edges);
    const Triple t{gen() % S, gen() % 3, 3 + gen() % 3};

    testing::ReferenceObjective objective;
    objective.K = static_cast<std::size_t>(K);
    objective.lambda = m.hyper.lambda;
    objective.beta = use_net ? m.hyper.beta : 0.0;
    objective.triples = {{t.s, t.i, t.j}};
    if (use_net) objective.edges = edges;

    auto g = gradients(m, t, use_net ? CdrTerm{&net} : CdrTerm{});
    for (int k = 0; k < K; ++k) {
      auto rel = [&](double analytic, bool wrt_p, std::size_t row) {
        const double fd = testing::central_difference(objective, m.P(), m.Q(), wrt_p, row * K + k);
        return std::abs(analytic - fd) / std::max({std::abs(analytic), std::abs(fd), 1e-6});
      };
      worst = std::max({worst, rel(g.student[k], true, t.s), rel(g.positive[k], false, t.i),
                        rel(g.negative[k], false, t.j)});
    }
  }
  return {worst <= 1e-4, std::to_string(instances) + " instances, max relative error " + format_double(worst)};
}

Outcome auc_oracle() {
  std::mt19937_64 gen(77);
  int mismatches = 0;
  int checked = 0;
  while (checked < 1000) {
    const std::size_t n = 2 + gen() % 99;
    std::vector<double> scores(n);
    std::vector<bool> positive(n);
    ScoredRanking ranking;
    std::set<CourseIndex> pos;
    const int levels = 1 + static_cast<int>(gen() % 20);
    for (std::size_t c = 0; c < n; ++c) {
      scores[c] = static_cast<double>(gen() % static_cast<unsigned>(levels)) * 0.37;
      positive[c] = gen() % 4 == 0;
      if (positive[c]) pos.insert(c);
      ranking.push_back({c, scores[c]});
    }
    if (pos.empty() || pos.size() == n) continue;
    ++checked;
    if (*auc(ranking, pos) != testing::brute_force_auc(scores, positive)) ++mismatches;
  }
  return {mismatches == 0, std::to_string(checked) + " instances, " + std::to_string(mismatches) + " mismatches"};
}

Outcome ppr_check() {
  std::mt19937_64 gen(404);
  double worst_entry = 0.0, worst_sum = 0.0;
  bool residual_ok = true, converged = true;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + gen() % 20;
    auto edges = testing::random_edges(gen, n, 0.05 + 0.4 * static_cast<double>(gen() % 100) / 100.0);
    auto net = testing::network_from_edges(n, edges);
    std::set<std::size_t> restart;
    const std::size_t k = 1 + gen() % std::min<std::size_t>(n, 4);
    while (restart.size() < k) restart.insert(gen() % n);
    PprQuery q;
    q.restart_set.assign(restart.begin(), restart.end());
    q.gamma = trial % 2 ? 0.7 : 0.05 + 0.9 * static_cast<double>(gen() % 100) / 100.0;
    auto dist = personalized_pagerank(net, q);
    converged = converged && dist.converged;
    auto expected = testing::dense_ppr(n, edges, restart, q.gamma);
    double sum = 0.0;
    for (std::size_t v = 0; v < n; ++v) {
      worst_entry = std::max(worst_entry, std::abs(dist.mass[v] - expected[v]));
      sum += dist.mass[v];
    }
    worst_sum = std::max(worst_sum, std::abs(sum - 1.0));
    residual_ok = residual_ok && ppr_residual(net, q, dist.mass) < q.tolerance;
  }
  return {converged && residual_ok && worst_entry <= 1e-8 && worst_sum <= 1e-9,
          "max entry error " + format_double(worst_entry) + ", max |sum - 1| " + format_double(worst_sum) +
              (residual_ok ? "" : ", residual above tolerance") + (converged ? "" : ", not converged")};
}

Outcome ablation() {
  ExperimentConfig config;
  std::map<std::string, double> mean;
  const int seeds = 5;
  for (int seed = 1; seed <= seeds; ++seed) {
    auto result = run_experiment(config, static_cast<std::uint64_t>(seed));
    for (const auto& [name, report] : result.reports) mean[name] += report.mean_auc / seeds;
  }
  std::ostringstream detail;
  detail << std::setprecision(4);
  for (const char* name : {"popularity", "bpr", "two-stage", "two-stage-cdr", "ppr", "ensemble"}) {
    detail << name << '=' << mean[name] << ' ';
  }
  Outcome o;
  auto require = [&](bool ok, const std::string& what) {
    if (!ok) {
      o.pass = false;
      detail << "[violated: " << what << "] ";
    }
  };
  require(mean["two-stage"] > mean["bpr"], "two-stage > bpr");
  require(mean["two-stage-cdr"] >= mean["two-stage"] - 0.005, "cdr >= two-stage - 0.005");
  require(mean["ensemble"] >= std::max(mean["two-stage-cdr"], mean["ppr"]) - 0.005, "ensemble >= inputs - 0.005");
  for (const char* name : {"bpr", "two-stage", "two-stage-cdr", "ensemble"}) {
    require(mean[name] >= mean["popularity"] + 0.03, std::string(name) + " >= popularity + 0.03");
  }
  o.detail = detail.str();
  return o;
}

Outcome ar_audit() {
  auto ds = prepare_split(generate_synthetic(SynthConfig{}, 1), 2010);
  Hyperparameters h;
  h.epochs = 10;
  std::size_t drawn = 0, ar = 0;
  TrainOptions options;
  options.observer = [&](const Triple& t) {
    ++drawn;
    if (ds.is_current(t.s) && ds.is_advanced(t.j)) ++ar;
  };
  auto network = split_network(ds, 0.03);
  train_two_stage(ds, h, &network, options);
  train_single_stage(ds, h, nullptr, options);
  return {drawn > 0 && ar == 0, std::to_string(drawn) + " negatives drawn, " + std::to_string(ar) + " from AR"};
}

Outcome cdr_contraction() {
  auto ds = prepare_split(generate_synthetic(SynthConfig{}, 1), 2010);
  const CourseIndex f = ds.course_index.at(synthetic_course_id(0));
  const CourseIndex g = ds.course_index.at(synthetic_course_id(1));
  std::vector<std::vector<Edge>> edges(ds.num_courses());
  edges[f].push_back({g, 1.0});
  TransitionNetwork forced(ds.course_index, edges);
  auto distance = [&](double beta) {
    Hyperparameters h;
    h.beta = beta;
    auto m = train_two_stage(ds, h, &forced);
    double d2 = 0.0;
    for (int k = 0; k < m.K(); ++k) d2 += std::pow(m.course(f)[k] - m.course(g)[k], 2);
    return std::sqrt(d2);
  };
  const double without = distance(0.0);
  const double with = distance(0.008);
  return {with < without, "|Qf - Qg| = " + format_double(with) + " with beta 0.008 vs " + format_double(without) +
                              " with beta 0"};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

Outcome determinism() {
  const fs::path dir = fs::temp_directory_path() / "ocrank_acceptance_determinism";
  fs::remove_all(dir);
  std::ostringstream sink;
  auto cli = [&](std::vector<std::string> args) {
    args.insert(args.begin(), "ocrank");
    if (cli::run_command(args, sink, sink) != 0) throw std::runtime_error("command failed: " + sink.str());
  };
  cli({"generate", "--seed", "3", "--out", (dir / "g1").string()});
  cli({"generate", "--seed", "3", "--out", (dir / "g2").string()});
  const auto data = (dir / "g1" / "records.csv").string();
  for (const char* name : {"t1", "t2"}) {
    cli({"train", "--in", data, "--target-cohort", "2010", "--seed", "7", "--out", (dir / name).string()});
  }
  const auto g1 = slurp(dir / "g1" / "records.csv");
  const auto t1 = slurp(dir / "t1" / "model.txt");
  const bool same_data = !g1.empty() && g1 == slurp(dir / "g2" / "records.csv");
  const bool same_model = !t1.empty() && t1 == slurp(dir / "t2" / "model.txt");
  fs::remove_all(dir);
  return {same_data && same_model, std::string("datasets ") + (same_data ? "identical" : "differ") + ", models " +
                                       (same_model ? "identical" : "differ")};
}

Outcome hypothesis_tests() {
  std::vector<double> a(30), b(30);
  for (int k = 0; k < 30; ++k) {
    a[k] = 0.6 + 0.01 * k;
    b[k] = a[k] + 0.001 * (k + 1);
  }
  auto same = paired_test(a, a);
  auto better = paired_test(a, b);
  const bool ok = same.t_p_value == 1.0 && same.sign_p_value == 1.0 && better.sign_p_value == std::ldexp(1.0, -30);
  return {ok, "identical: t p=" + format_double(same.t_p_value) + " sign p=" + format_double(same.sign_p_value) +
                  "; 30 positive: sign p=" + format_double(better.sign_p_value)};
}

Outcome ranksvm_sanity() {
  const std::vector<RankingPair> pairs{
      {{0.9, 0.1}, {0.2, 0.3}}, {{0.5, 0.8}, {0.6, 0.2}}, {{0.1, 0.9}, {0.7, 0.1}},
      {{0.4, 0.4}, {0.3, 0.2}}, {{1.0, 0.0}, {0.0, 0.3}}, {{0.2, 0.7}, {0.9, 0.0}},
      {{0.6, 0.6}, {0.5, 0.1}}, {{0.3, 0.5}, {0.1, 0.4}},
  };
  auto model = train_ranksvm(pairs, 1.0, 200, 0);
  int right = 0;
  for (const auto& p : pairs) right += model.decision(p.positive) > model.decision(p.negative);

  auto courses = IdIndex::from_ids({"a", "b", "c", "d", "e"});
  ScoredRanking cf{{0, 0.3}, {1, 2.0}, {2, -1.0}, {3, 0.9}, {4, 0.1}};
  ScoredRanking ppr{{0, 0.4}, {1, 0.1}, {2, 0.3}, {3, 0.2}, {4, 0.0}};
  auto features = build_features(cf, ppr, {0, 1, 2, 3, 4});
  auto same_order = [&](const RankSvmModel& m, ScoredRanking single) {
    sort_ranking(single, courses);
    auto ranked = ensemble_rank(m, features, courses);
    for (std::size_t n = 0; n < single.size(); ++n) {
      if (ranked[n].course != single[n].course) return false;
    }
    return true;
  };
  const bool axis = same_order({{1.0, 0.0}, 1.0, true}, cf) && same_order({{0.0, 1.0}, 1.0, true}, ppr);
  return {right == 8 && axis, "pairwise accuracy " + std::to_string(right) + "/8, axis-aligned orderings " +
                                  (axis ? "match" : "differ")};
}

}  // namespace

int main() {
  bool ok = true;
  ok &= run_criterion(1, "golden transition network", 1, golden_network);
  ok &= run_criterion(2, "gradients vs central differences", 10, gradient_check);
  ok &= run_criterion(3, "AUC vs exhaustive pair count", 5, auc_oracle);
  ok &= run_criterion(4, "PPR vs dense linear solve", 10, ppr_check);
  ok &= run_criterion(5, "directional ablation, 5 seeds", 120, ablation);
  ok &= run_criterion(6, "no AR negatives in training", 0, ar_audit);
  ok &= run_criterion(7, "dependency penalty contracts a forced edge", 0, cdr_contraction);
  ok &= run_criterion(8, "CLI determinism", 0, determinism);
  ok &= run_criterion(9, "paired test sanity", 0, hypothesis_tests);
  ok &= run_criterion(10, "RankSVM sanity", 0, ranksvm_sanity);
  std::cout << (ok ? "all criteria passed" : "some criteria failed") << std::endl;
  return ok ? 0 : 1;
}
