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
#include <functional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ocrank/random.hpp"
#include "ocrank/transition_network.hpp"
#include "ocrank/types.hpp"

namespace ocrank {

struct Hyperparameters {
  int K = 12;
  double lambda = 0.05;
  double alpha = 0.05;
  double beta = 0.008;
  int epochs = 30;
  std::uint64_t seed = 0;

  void validate() const {
    if (K < 1) throw std::invalid_argument("K must be >= 1");
    if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be > 0");
    if (!(lambda >= 0.0)) throw std::invalid_argument("lambda must be >= 0");
    if (!(beta >= 0.0)) throw std::invalid_argument("beta must be >= 0");
    if (epochs < 0) throw std::invalid_argument("epochs must be >= 0");
  }
};

/// Latent factors: P is students x K, Q is courses x K, both row-major.
class FactorModel {
 public:
  FactorModel() = default;
  FactorModel(std::size_t students, std::size_t courses, int K)
      : students_(students), courses_(courses), K_(static_cast<std::size_t>(K)),
        P_(students * K_, 0.0), Q_(courses * K_, 0.0) {}

  std::size_t num_students() const { return students_; }
  std::size_t num_courses() const { return courses_; }
  int K() const { return static_cast<int>(K_); }

  std::span<double> student(StudentIndex s) {
    check_student(s);
    return {P_.data() + s * K_, K_};
  }
  std::span<const double> student(StudentIndex s) const {
    check_student(s);
    return {P_.data() + s * K_, K_};
  }
  std::span<double> course(CourseIndex c) {
    check_course(c);
    return {Q_.data() + c * K_, K_};
  }
  std::span<const double> course(CourseIndex c) const {
    check_course(c);
    return {Q_.data() + c * K_, K_};
  }

  const std::vector<double>& P() const { return P_; }
  const std::vector<double>& Q() const { return Q_; }

  bool all_finite() const {
    for (double v : P_) if (!std::isfinite(v)) return false;
    for (double v : Q_) if (!std::isfinite(v)) return false;
    return true;
  }

  Hyperparameters hyper;

  bool operator==(const FactorModel& o) const {
    return students_ == o.students_ && courses_ == o.courses_ && K_ == o.K_ && P_ == o.P_ &&
           Q_ == o.Q_;
  }

 private:
  void check_student(StudentIndex s) const {
    if (s >= students_) throw std::out_of_range("student index " + std::to_string(s));
  }
  void check_course(CourseIndex c) const {
    if (c >= courses_) throw std::out_of_range("course index " + std::to_string(c));
  }

  std::size_t students_ = 0;
  std::size_t courses_ = 0;
  std::size_t K_ = 0;
  std::vector<double> P_;
  std::vector<double> Q_;
};

/// (student, positive course, negative course)
struct Triple {
  StudentIndex s = 0;
  CourseIndex i = 0;
  CourseIndex j = 0;
};

/// Observed (student, course) pair.
struct Positive {
  StudentIndex s = 0;
  CourseIndex i = 0;
};

/// Entries drawn uniformly from [-0.01, 0.01] on the "init" stream of hyper.seed.
inline FactorModel init_model(std::size_t num_students, std::size_t num_courses,
                              const Hyperparameters& hyper) {
  hyper.validate();
  if (num_students == 0 || num_courses == 0) {
    throw std::invalid_argument("init_model: need at least one student and one course");
  }
  FactorModel model(num_students, num_courses, hyper.K);
  model.hyper = hyper;
  Rng rng = make_stream(hyper.seed, "init");
  for (StudentIndex s = 0; s < num_students; ++s) {
    for (double& v : model.student(s)) v = rng.uniform(-0.01, 0.01);
  }
  for (CourseIndex c = 0; c < num_courses; ++c) {
    for (double& v : model.course(c)) v = rng.uniform(-0.01, 0.01);
  }
  return model;
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double sum = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) sum += a[k] * b[k];
  return sum;
}

inline double squared_norm(std::span<const double> a) { return dot(a, a); }

inline double score(const FactorModel& model, StudentIndex s, CourseIndex c) {
  return dot(model.student(s), model.course(c));
}

/// y_sij = sum_k P_sk (Q_ik - Q_jk)
inline double pairwise_margin(const FactorModel& model, const Triple& t) {
  auto p = model.student(t.s);
  auto qi = model.course(t.i);
  auto qj = model.course(t.j);
  double y = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) y += p[k] * (qi[k] - qj[k]);
  return y;
}

/// ln(1 + exp(-y)) without overflow for large |y|.
inline double log_loss(double y) {
  return std::max(-y, 0.0) + std::log1p(std::exp(-std::abs(y)));
}

/// u = -exp(-y) / (1 + exp(-y)), evaluated as -1 / (1 + exp(y)).
inline double logistic_weight(double y) { return -1.0 / (1.0 + std::exp(y)); }

/// Which derivative of the dependency penalty is added to a course row.
enum class CdrGradient {
  /// Exact derivative of the penalty: out-edges and in-edges of the row.
  Symmetric,
  /// Out-edges only: beta * sum_{g in N(f)} w(f,g) (Q_f - Q_g).
  OutgoingOnly,
};

/// Course-dependency regularization settings. A null network disables it.
struct CdrTerm {
  const TransitionNetwork* network = nullptr;
  CdrGradient form = CdrGradient::Symmetric;

  explicit operator bool() const { return network != nullptr; }
};

/// (beta / 2) * sum_f sum_{g in N(f)} w(f,g) ||Q_f - Q_g||^2
inline double dependency_penalty(const FactorModel& model, const TransitionNetwork& network,
                                 double beta) {
  if (network.num_nodes() != model.num_courses()) {
    throw std::invalid_argument("network and model disagree on the number of courses");
  }
  double sum = 0.0;
  for (CourseIndex f = 0; f < network.num_nodes(); ++f) {
    auto qf = model.course(f);
    for (const auto& e : network.neighbors(f)) {
      auto qg = model.course(e.target);
      double d2 = 0.0;
      for (std::size_t k = 0; k < qf.size(); ++k) d2 += (qf[k] - qg[k]) * (qf[k] - qg[k]);
      sum += e.weight * d2;
    }
  }
  return 0.5 * beta * sum;
}

/// Ranking loss over `triples` plus L2 on all of P and Q, plus the
/// dependency penalty when a network is supplied.
inline double loss(const FactorModel& model, std::span<const Triple> triples,
                   const TransitionNetwork* network = nullptr) {
  if (triples.empty()) throw std::invalid_argument("loss: no triples");
  double sum = 0.0;
  for (const auto& t : triples) sum += log_loss(pairwise_margin(model, t));
  const double lambda = model.hyper.lambda;
  if (lambda != 0.0) {
    double reg = 0.0;
    for (double v : model.P()) reg += v * v;
    for (double v : model.Q()) reg += v * v;
    sum += lambda * reg;
  }
  if (network) sum += dependency_penalty(model, *network, model.hyper.beta);
  return sum;
}

/// Dependency-penalty gradient contribution for course row f.
inline std::vector<double> dependency_gradient(const FactorModel& model, CourseIndex f,
                                               const CdrTerm& cdr) {
  const double beta = model.hyper.beta;
  auto qf = model.course(f);
  std::vector<double> t(qf.size(), 0.0);
  auto accumulate = [&](const std::vector<Edge>& edges) {
    for (const auto& e : edges) {
      auto qg = model.course(e.target);
      for (std::size_t k = 0; k < t.size(); ++k) t[k] += beta * e.weight * (qf[k] - qg[k]);
    }
  };
  accumulate(cdr.network->neighbors(f));
  if (cdr.form == CdrGradient::Symmetric) accumulate(cdr.network->in_neighbors(f));
  return t;
}

struct Gradients {
  std::vector<double> student;
  std::vector<double> positive;
  std::vector<double> negative;
};

/// Per-triple gradient of the loss with respect to P_s, Q_i and Q_j.
inline Gradients gradients(const FactorModel& model, const Triple& t, const CdrTerm& cdr = {}) {
  const double lambda = model.hyper.lambda;
  const double u = logistic_weight(pairwise_margin(model, t));
  auto p = model.student(t.s);
  auto qi = model.course(t.i);
  auto qj = model.course(t.j);
  const std::size_t K = p.size();
  Gradients g{std::vector<double>(K), std::vector<double>(K), std::vector<double>(K)};
  for (std::size_t k = 0; k < K; ++k) {
    g.student[k] = u * (qi[k] - qj[k]) + 2.0 * lambda * p[k];
    g.positive[k] = u * p[k] + 2.0 * lambda * qi[k];
    g.negative[k] = -u * p[k] + 2.0 * lambda * qj[k];
  }
  if (cdr) {
    auto ti = dependency_gradient(model, t.i, cdr);
    auto tj = dependency_gradient(model, t.j, cdr);
    for (std::size_t k = 0; k < K; ++k) {
      g.positive[k] += ti[k];
      g.negative[k] += tj[k];
    }
  }
  return g;
}

/// Uniform draw from `pool` minus the courses flagged in `positive`.
inline CourseIndex sample_negative(Rng& rng, StudentIndex s, std::span<const char> positive,
                                   std::span<const CourseIndex> pool) {
  if (!pool.empty()) {
    // Rejection first; positives are usually a small share of the pool.
    for (int attempt = 0; attempt < 32; ++attempt) {
      CourseIndex c = pool[rng.below(pool.size())];
      if (c >= positive.size() || !positive[c]) return c;
    }
    std::vector<CourseIndex> eligible;
    for (CourseIndex c : pool) {
      if (c >= positive.size() || !positive[c]) eligible.push_back(c);
    }
    if (!eligible.empty()) return eligible[rng.below(eligible.size())];
  }
  throw ValidationError("no eligible negative course for student " + std::to_string(s));
}

/// Negative pools and updatable parameters for one training stage.
struct SamplingScope {
  /// Candidate negative pools; each student uses pools[pool_of_student[s]].
  std::vector<std::vector<CourseIndex>> pools;
  std::vector<std::size_t> pool_of_student;
  /// positives[s][c] != 0 iff c is in I_s^+ for this stage.
  std::vector<std::vector<char>> positives;
  /// Stage 1 moves P and Q; stage 2 moves P only.
  bool update_courses = true;

  std::span<const CourseIndex> pool_for(StudentIndex s) const { return pools.at(pool_of_student.at(s)); }
};

/// Independent random streams used by one training stage.
struct TrainingStreams {
  Rng shuffle;
  Rng negative;

  static TrainingStreams from_seed(std::uint64_t seed, std::string_view stage) {
    return {make_stream(seed, std::string("shuffle/").append(stage)),
            make_stream(seed, std::string("negative/").append(stage))};
  }
};

using TripleObserver = std::function<void(const Triple&)>;

/// One pass over `positives` in shuffled order, one sampled negative each.
/// Returns the summed ranking loss of the visited triples, measured before
/// each update.
inline double sgd_epoch(FactorModel& model, std::span<const Positive> positives,
                        const SamplingScope& scope, const CdrTerm& cdr, TrainingStreams& streams,
                        const TripleObserver& observer = {}) {
  if (positives.empty()) throw std::invalid_argument("sgd_epoch: no positives");
  const double alpha = model.hyper.alpha;
  const std::size_t K = static_cast<std::size_t>(model.K());

  std::vector<std::size_t> order(positives.size());
  for (std::size_t n = 0; n < order.size(); ++n) order[n] = n;
  streams.shuffle.shuffle(order);

  std::vector<double> next_p(K);
  std::vector<double> next_qi(K);
  std::vector<double> next_qj(K);
  double epoch_loss = 0.0;
  for (std::size_t n : order) {
    const auto& pos = positives[n];
    Triple t{pos.s, pos.i, sample_negative(streams.negative, pos.s, scope.positives.at(pos.s),
                                           scope.pool_for(pos.s))};
    if (observer) observer(t);
    epoch_loss += log_loss(pairwise_margin(model, t));
    auto g = gradients(model, t, cdr);

    auto p = model.student(t.s);
    auto qi = model.course(t.i);
    auto qj = model.course(t.j);
    bool finite = true;
    for (std::size_t k = 0; k < K; ++k) {
      next_p[k] = p[k] - alpha * g.student[k];
      next_qi[k] = qi[k] - alpha * g.positive[k];
      next_qj[k] = qj[k] - alpha * g.negative[k];
      finite = finite && std::isfinite(next_p[k]) &&
               (!scope.update_courses || (std::isfinite(next_qi[k]) && std::isfinite(next_qj[k])));
    }
    if (!finite) {
      std::ostringstream msg;
      msg << "non-finite update at triple (s=" << t.s << ", i=" << t.i << ", j=" << t.j
          << "), margin " << pairwise_margin(model, t);
      throw NumericError(msg.str());
    }
    std::copy(next_p.begin(), next_p.end(), p.begin());
    if (scope.update_courses) {
      std::copy(next_qi.begin(), next_qi.end(), qi.begin());
      std::copy(next_qj.begin(), next_qj.end(), qj.begin());
    }
  }
  return epoch_loss;
}

}  // namespace ocrank
