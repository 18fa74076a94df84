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
#include <array>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ocrank/random.hpp"
#include "ocrank/types.hpp"

namespace ocrank {

/// Per-candidate features: the CF score and the PPR mass, each min-max
/// rescaled over one student's candidate list.
struct FeatureVector {
  CourseIndex course = 0;
  std::array<double, 2> x{};
};

/// Rescales `values` to [0, 1]; a constant column maps to 0.5.
inline void min_max_normalize(std::vector<double>& values) {
  if (values.empty()) return;
  auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  const double min = *lo;
  const double range = *hi - *lo;
  for (double& v : values) v = range > 0.0 ? (v - min) / range : 0.5;
}

/// Candidates missing from a ranking get a raw score of 0.
inline std::vector<FeatureVector> build_features(const ScoredRanking& cf, const ScoredRanking& ppr,
                                                 const std::vector<CourseIndex>& candidates) {
  if (candidates.empty()) throw std::invalid_argument("build_features: no candidates");
  auto lookup = [](const ScoredRanking& ranking, CourseIndex c) {
    for (const auto& entry : ranking) {
      if (entry.course == c) return entry.score;
    }
    return 0.0;
  };
  std::vector<double> cf_col;
  std::vector<double> ppr_col;
  for (CourseIndex c : candidates) {
    cf_col.push_back(lookup(cf, c));
    ppr_col.push_back(lookup(ppr, c));
  }
  min_max_normalize(cf_col);
  min_max_normalize(ppr_col);
  std::vector<FeatureVector> out;
  for (std::size_t n = 0; n < candidates.size(); ++n) {
    out.push_back({candidates[n], {cf_col[n], ppr_col[n]}});
  }
  return out;
}

struct RankingPair {
  std::array<double, 2> positive{};
  std::array<double, 2> negative{};
};

struct RankSvmModel {
  std::array<double, 2> weight{};
  double reg_c = 1.0;
  bool trained = false;

  double decision(const std::array<double, 2>& x) const { return weight[0] * x[0] + weight[1] * x[1]; }
};

/// (1/2)||w||^2 + C * sum max(0, 1 - w . (x+ - x-))
inline double ranksvm_objective(const std::array<double, 2>& w, const std::vector<RankingPair>& pairs,
                                double reg_c) {
  double hinge = 0.0;
  for (const auto& p : pairs) {
    const double margin = w[0] * (p.positive[0] - p.negative[0]) + w[1] * (p.positive[1] - p.negative[1]);
    hinge += std::max(0.0, 1.0 - margin);
  }
  return 0.5 * (w[0] * w[0] + w[1] * w[1]) + reg_c * hinge;
}

/// Linear RankSVM by incremental subgradient descent. Epoch t visits the
/// pairs in a seeded shuffled order with step 1 / (reg_c * t); each pair
/// carries 1/n of the norm penalty. Returns the iterate with the lowest
/// objective seen at the end of an epoch.
inline RankSvmModel train_ranksvm(const std::vector<RankingPair>& pairs, double reg_c = 1.0,
                                  int epochs = 200, std::uint64_t seed = 0) {
  if (pairs.empty()) throw std::invalid_argument("train_ranksvm: no pairs");
  if (!(reg_c > 0.0)) throw std::invalid_argument("train_ranksvm: reg_c must be > 0");
  Rng rng = make_stream(seed, "ranksvm");
  const double share = 1.0 / static_cast<double>(pairs.size());
  std::vector<std::size_t> order(pairs.size());
  for (std::size_t n = 0; n < order.size(); ++n) order[n] = n;

  std::array<double, 2> w{0.0, 0.0};
  std::array<double, 2> best = w;
  double best_objective = ranksvm_objective(w, pairs, reg_c);
  for (int t = 1; t <= epochs; ++t) {
    const double step = 1.0 / (reg_c * static_cast<double>(t));
    rng.shuffle(order);
    for (std::size_t n : order) {
      const auto& p = pairs[n];
      const double d0 = p.positive[0] - p.negative[0];
      const double d1 = p.positive[1] - p.negative[1];
      const bool violated = w[0] * d0 + w[1] * d1 < 1.0;
      double g0 = share * w[0];
      double g1 = share * w[1];
      if (violated) {
        g0 -= reg_c * d0;
        g1 -= reg_c * d1;
      }
      w[0] -= step * g0;
      w[1] -= step * g1;
    }
    if (!std::isfinite(w[0]) || !std::isfinite(w[1])) {
      throw NumericError("train_ranksvm: non-finite weights at epoch " + std::to_string(t));
    }
    const double objective = ranksvm_objective(w, pairs, reg_c);
    if (objective < best_objective) {
      best_objective = objective;
      best = w;
    }
  }
  return {best, reg_c, true};
}

/// Candidates by descending w . x, ties by course id.
inline ScoredRanking ensemble_rank(const RankSvmModel& model, const std::vector<FeatureVector>& features,
                                   const IdIndex& courses) {
  if (!model.trained) throw std::logic_error("ensemble_rank: model is not trained");
  ScoredRanking ranking;
  for (const auto& f : features) ranking.push_back({f.course, model.decision(f.x)});
  sort_ranking(ranking, courses);
  return ranking;
}

inline constexpr std::string_view kEnsembleMagic = "ocrank-ensemble";

inline void write_ensemble(std::ostream& out, const RankSvmModel& model) {
  out << kEnsembleMagic << " v1 " << format_double(model.weight[0]) << ' '
      << format_double(model.weight[1]) << ' ' << format_double(model.reg_c) << '\n';
}

inline RankSvmModel read_ensemble(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty ensemble file");
  std::istringstream fields(line);
  std::string magic, version, w0, w1, c;
  if (!(fields >> magic >> version >> w0 >> w1 >> c) || magic != kEnsembleMagic || version != "v1") {
    throw ParseError("bad ensemble header: '" + line + "'");
  }
  return {{parse_double(w0), parse_double(w1)}, parse_double(c), true};
}

}  // namespace ocrank
