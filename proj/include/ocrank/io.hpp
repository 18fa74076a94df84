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

#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "ocrank/bprmf.hpp"
#include "ocrank/dataset.hpp"
#include "ocrank/evaluation.hpp"
#include "ocrank/types.hpp"

namespace ocrank {

inline constexpr std::string_view kModelMagic = "ocrank-model";

/// A factor model together with the id maps its rows refer to.
struct SavedModel {
  FactorModel model;
  IdIndex students;
  IdIndex courses;
};

namespace detail {

inline void write_row(std::ostream& out, std::span<const double> row) {
  for (std::size_t k = 0; k < row.size(); ++k) {
    if (k) out << ' ';
    out << format_double(row[k]);
  }
  out << '\n';
}

inline void read_row(std::istream& in, std::span<double> row, const char* what, std::size_t n) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(std::string("model file truncated in ") + what + " rows");
  auto fields = split(strip(line), ' ');
  if (fields.size() != row.size()) {
    throw ParseError(std::string("model file: ") + what + " row " + std::to_string(n) + " has " +
                     std::to_string(fields.size()) + " values, expected " + std::to_string(row.size()));
  }
  for (std::size_t k = 0; k < row.size(); ++k) row[k] = parse_double(fields[k]);
}

inline IdIndex read_index(std::istream& in, std::size_t count, const char* what) {
  IdIndex index;
  std::string line;
  for (std::size_t n = 0; n < count; ++n) {
    if (!std::getline(in, line)) throw ParseError(std::string("model file truncated in ") + what + " ids");
    auto fields = split(strip(line), '\t');
    if (fields.size() != 2 || parse_integer(fields[1]) != static_cast<long long>(n)) {
      throw ParseError(std::string("model file: bad ") + what + " id line '" + line + "'");
    }
    index.insert(std::string(fields[0]));
  }
  if (index.size() != count) throw ParseError(std::string("model file: duplicate ") + what + " id");
  return index;
}

}  // namespace detail

/// Header `ocrank-model v1 <students> <courses> <K>`, one line per student
/// row, one per course row, then `id<TAB>index` lines for students and courses.
inline void write_model(std::ostream& out, const FactorModel& model, const IdIndex& students,
                        const IdIndex& courses) {
  if (students.size() != model.num_students() || courses.size() != model.num_courses()) {
    throw std::invalid_argument("write_model: index sizes do not match the model");
  }
  out << kModelMagic << " v1 " << model.num_students() << ' ' << model.num_courses() << ' '
      << model.K() << '\n';
  for (StudentIndex s = 0; s < model.num_students(); ++s) detail::write_row(out, model.student(s));
  for (CourseIndex c = 0; c < model.num_courses(); ++c) detail::write_row(out, model.course(c));
  for (std::size_t n = 0; n < students.size(); ++n) out << students.id(n) << '\t' << n << '\n';
  for (std::size_t n = 0; n < courses.size(); ++n) out << courses.id(n) << '\t' << n << '\n';
}

inline SavedModel read_model(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty model file");
  std::istringstream header(line);
  std::string magic, version;
  long long S = 0, C = 0, K = 0;
  if (!(header >> magic >> version >> S >> C >> K) || magic != kModelMagic || version != "v1" ||
      S <= 0 || C <= 0 || K <= 0) {
    throw ParseError("bad model header: '" + line + "'");
  }
  SavedModel saved;
  saved.model = FactorModel(static_cast<std::size_t>(S), static_cast<std::size_t>(C), static_cast<int>(K));
  saved.model.hyper.K = static_cast<int>(K);
  for (StudentIndex s = 0; s < saved.model.num_students(); ++s) {
    detail::read_row(in, saved.model.student(s), "student", s);
  }
  for (CourseIndex c = 0; c < saved.model.num_courses(); ++c) {
    detail::read_row(in, saved.model.course(c), "course", c);
  }
  saved.students = detail::read_index(in, saved.model.num_students(), "student");
  saved.courses = detail::read_index(in, saved.model.num_courses(), "course");
  return saved;
}

/// student -> [(course, score)] in file order.
using ScoreTable = std::map<std::string, std::vector<std::pair<std::string, double>>>;

/// Lines of `student_id<TAB>course_id<TAB>score`.
inline void write_scores(std::ostream& out, const ScoreTable& table) {
  for (const auto& [student, entries] : table) {
    for (const auto& [course, value] : entries) {
      out << student << '\t' << course << '\t' << format_double(value) << '\n';
    }
  }
}

inline ScoreTable read_scores(std::istream& in) {
  ScoreTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto text = strip(line);
    if (text.empty()) continue;
    auto fields = split(text, '\t');
    if (fields.size() != 3) {
      throw ParseError("score file line " + std::to_string(line_no) + ": expected 3 fields");
    }
    table[std::string(fields[0])].emplace_back(std::string(fields[1]), parse_double(fields[2]));
  }
  return table;
}

/// Per-student AUC of a score table against truth records. Students present
/// in the truth but absent from the table are skipped and listed as failures.
inline EvaluationReport evaluate_scores(const ScoreTable& table,
                                        const std::vector<RegistrationRecord>& truth) {
  std::map<std::string, std::set<std::string>> positives;
  for (const auto& r : truth) positives[r.student_id].insert(r.course_id);
  EvaluationReport report;
  for (const auto& [student, courses] : positives) {
    auto it = table.find(student);
    if (it == table.end()) {
      report.failures[student] = "no scores";
      ++report.num_skipped;
      continue;
    }
    IdIndex local;
    ScoredRanking ranking;
    std::set<CourseIndex> pos;
    for (const auto& [course, value] : it->second) {
      const CourseIndex c = local.insert(course);
      ranking.push_back({c, value});
      if (courses.count(course)) pos.insert(c);
    }
    auto value = auc(ranking, pos);
    if (!value) {
      ++report.num_skipped;
      continue;
    }
    report.per_student_auc[student] = *value;
  }
  report.mean_auc = mean_of(report.per_student_auc);
  return report;
}

/// Lines of `student_id<TAB>auc`.
inline void write_auc_report(std::ostream& out, const EvaluationReport& report) {
  for (const auto& [student, value] : report.per_student_auc) {
    out << student << '\t' << format_double(value) << '\n';
  }
}

}  // namespace ocrank
