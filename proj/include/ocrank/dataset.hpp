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
#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "ocrank/random.hpp"
#include "ocrank/types.hpp"

namespace ocrank {

inline constexpr int kDefaultGrades = 4;

/// One registration event: a student took a course at a grade level.
struct RegistrationRecord {
  std::string student_id;
  std::string course_id;
  int cohort_year = 0;
  int grade_level = 1;  // 1 = freshman

  bool operator==(const RegistrationRecord&) const = default;
};

inline constexpr std::string_view kRecordsHeader = "student_id,course_id,cohort_year,grade_level";

namespace detail {

struct TripleHash {
  std::size_t operator()(const std::tuple<std::string, std::string, int>& t) const {
    std::size_t h = std::hash<std::string>{}(std::get<0>(t));
    h = h * 1000003u ^ std::hash<std::string>{}(std::get<1>(t));
    return h * 1000003u ^ std::hash<int>{}(std::get<2>(t));
  }
};

}  // namespace detail

/// Drops repeated (student, course, grade) triples, keeping the first
/// occurrence. Conflicting cohort years for one student are rejected.
inline std::vector<RegistrationRecord> deduplicate(const std::vector<RegistrationRecord>& records) {
  std::unordered_set<std::tuple<std::string, std::string, int>, detail::TripleHash> seen;
  std::unordered_map<std::string, int> cohort_of;
  std::vector<RegistrationRecord> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    auto [it, fresh] = cohort_of.emplace(r.student_id, r.cohort_year);
    if (!fresh && it->second != r.cohort_year) {
      throw ValidationError("student '" + r.student_id + "' appears with cohort years " +
                            std::to_string(it->second) + " and " + std::to_string(r.cohort_year));
    }
    if (seen.emplace(r.student_id, r.course_id, r.grade_level).second) out.push_back(r);
  }
  return out;
}

/// Parses the registration CSV. Line numbers in errors are 1-based and count
/// the header.
inline std::vector<RegistrationRecord> parse_records(std::istream& in, int max_grade = kDefaultGrades) {
  std::string line;
  std::size_t line_no = 0;
  bool saw_header = false;
  std::vector<RegistrationRecord> records;
  while (std::getline(in, line)) {
    ++line_no;
    auto text = strip(line);
    if (text.empty()) continue;
    if (!saw_header) {
      if (text != kRecordsHeader) {
        throw ParseError("line " + std::to_string(line_no) + ": expected header '" +
                         std::string(kRecordsHeader) + "'");
      }
      saw_header = true;
      continue;
    }
    auto fields = split(text, ',');
    if (fields.size() != 4) {
      throw ParseError("line " + std::to_string(line_no) + ": expected 4 fields, got " +
                       std::to_string(fields.size()));
    }
    RegistrationRecord r;
    r.student_id = std::string(strip(fields[0]));
    r.course_id = std::string(strip(fields[1]));
    if (r.student_id.empty() || r.course_id.empty()) {
      throw ParseError("line " + std::to_string(line_no) + ": empty id");
    }
    try {
      r.cohort_year = static_cast<int>(parse_integer(strip(fields[2])));
      r.grade_level = static_cast<int>(parse_integer(strip(fields[3])));
    } catch (const ParseError& e) {
      throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
    }
    if (r.grade_level < 1 || r.grade_level > max_grade) {
      throw ValidationError("line " + std::to_string(line_no) + ": grade_level " +
                            std::to_string(r.grade_level) + " outside [1, " +
                            std::to_string(max_grade) + "]");
    }
    records.push_back(std::move(r));
  }
  if (!saw_header) throw ParseError("missing header line");
  return deduplicate(records);
}

inline std::vector<RegistrationRecord> load_records(const std::string& path,
                                                    int max_grade = kDefaultGrades) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  return parse_records(in, max_grade);
}

inline void write_records(std::ostream& out, const std::vector<RegistrationRecord>& records) {
  out << kRecordsHeader << '\n';
  for (const auto& r : records) {
    out << r.student_id << ',' << r.course_id << ',' << r.cohort_year << ',' << r.grade_level
        << '\n';
  }
}

// ---------------------------------------------------------------------------
// Course classes

enum class CourseKind { Fundamental, Advanced };

struct CourseClass {
  std::string course_id;
  CourseKind kind = CourseKind::Fundamental;
  int dominant_grade = 1;
  double dominance_fraction = 0.0;  // share of registrations at the dominant grade
  double advanced_fraction = 0.0;   // share of registrations at grade >= advanced_grade
};

struct ClassifyOptions {
  int advanced_grade = 3;
  double dominance = 0.5;
  int max_grade = kDefaultGrades;
};

/// A course is Advanced iff the share of its registrations made at grade
/// >= advanced_grade reaches `dominance`.
inline std::map<std::string, CourseClass> classify_courses(
    const std::vector<RegistrationRecord>& records, const ClassifyOptions& options = {}) {
  if (options.advanced_grade < 1 || options.advanced_grade > options.max_grade) {
    throw std::invalid_argument("advanced_grade must lie in [1, max_grade]");
  }
  if (!(options.dominance > 0.0 && options.dominance <= 1.0)) {
    throw std::invalid_argument("dominance must lie in (0, 1]");
  }
  std::map<std::string, std::vector<long>> counts;
  for (const auto& r : records) {
    if (r.grade_level < 1 || r.grade_level > options.max_grade) {
      throw ValidationError("grade_level out of range for course '" + r.course_id + "'");
    }
    auto& c = counts[r.course_id];
    if (c.empty()) c.assign(options.max_grade + 1, 0);
    ++c[r.grade_level];
  }
  std::map<std::string, CourseClass> classes;
  for (const auto& [course, by_grade] : counts) {
    long total = 0;
    long advanced = 0;
    int dominant = 1;
    for (int g = 1; g <= options.max_grade; ++g) {
      total += by_grade[g];
      if (g >= options.advanced_grade) advanced += by_grade[g];
      if (by_grade[g] > by_grade[dominant]) dominant = g;
    }
    CourseClass cls;
    cls.course_id = course;
    cls.dominant_grade = dominant;
    cls.dominance_fraction = static_cast<double>(by_grade[dominant]) / static_cast<double>(total);
    cls.advanced_fraction = static_cast<double>(advanced) / static_cast<double>(total);
    cls.kind = cls.advanced_fraction >= options.dominance ? CourseKind::Advanced
                                                          : CourseKind::Fundamental;
    classes.emplace(course, cls);
  }
  return classes;
}

// ---------------------------------------------------------------------------
// Partition

enum class Block { FG, AG, FC };

inline const char* block_name(Block b) {
  switch (b) {
    case Block::FG: return "FG";
    case Block::AG: return "AG";
    case Block::FC: return "FC";
  }
  return "?";
}

struct LabeledRecord {
  RegistrationRecord record;
  StudentIndex student = 0;
  CourseIndex course = 0;
  Block block = Block::FG;
};

struct PartitionOptions {
  int max_grade = kDefaultGrades;
  /// Throw instead of dropping current-student records at advanced courses.
  bool strict_ar = false;
};

/// Registration records split into the FG / AG / FC training blocks. The AR
/// block (current students x advanced courses) is never materialized.
struct PartitionedDataset {
  std::vector<LabeledRecord> records;
  IdIndex student_index;
  IdIndex course_index;
  std::set<std::string> graduated_students;
  std::set<std::string> current_students;
  std::map<std::string, CourseClass> course_classes;
  std::optional<int> target_cohort;
  int max_grade = kDefaultGrades;

  /// Grade-G registrations of the current cohort; the evaluation target.
  std::vector<RegistrationRecord> heldout;
  /// Pre-G registrations of current students at advanced courses. Observed
  /// history, but excluded from training so AR stays unobserved.
  std::vector<RegistrationRecord> excluded_ar;
  /// Non-target students without a grade-G record.
  std::set<std::string> incomplete_students;

  bool is_advanced(CourseIndex c) const { return advanced_flags.at(c) != 0; }
  bool is_current(StudentIndex s) const { return current_flags.at(s) != 0; }
  std::size_t num_students() const { return student_index.size(); }
  std::size_t num_courses() const { return course_index.size(); }

  /// Every observed (pre-holdout) record: retained plus excluded AR.
  std::vector<RegistrationRecord> observed_records() const {
    std::vector<RegistrationRecord> out;
    out.reserve(records.size() + excluded_ar.size());
    for (const auto& r : records) out.push_back(r.record);
    out.insert(out.end(), excluded_ar.begin(), excluded_ar.end());
    return out;
  }

  /// Held-out course sets keyed by student index.
  std::map<StudentIndex, std::set<CourseIndex>> heldout_by_student() const {
    std::map<StudentIndex, std::set<CourseIndex>> out;
    for (const auto& r : heldout) {
      out[student_index.at(r.student_id)].insert(course_index.at(r.course_id));
    }
    return out;
  }

  /// Courses a student took before the held-out year (including excluded AR).
  std::set<CourseIndex> history(StudentIndex s) const {
    std::set<CourseIndex> out;
    for (const auto& r : records) {
      if (r.student == s) out.insert(r.course);
    }
    const auto& id = student_index.id(s);
    for (const auto& r : excluded_ar) {
      if (r.student_id == id) out.insert(course_index.at(r.course_id));
    }
    return out;
  }

  std::vector<char> advanced_flags;
  std::vector<char> current_flags;
};

/// Splits records into training blocks. Students of `target_cohort` become
/// current students whose grade-G records are held out; every other student
/// with a grade-G record is graduated. Courses without a class entry are
/// treated as advanced (they were never observed outside the held-out year).
inline PartitionedDataset partition(const std::vector<RegistrationRecord>& raw,
                                    const std::map<std::string, CourseClass>& classes,
                                    std::optional<int> target_cohort,
                                    const PartitionOptions& options = {}) {
  auto input = deduplicate(raw);
  const int G = options.max_grade;

  std::map<std::string, int> cohort_of;
  std::set<std::string> has_final_grade;
  for (const auto& r : input) {
    if (r.grade_level < 1 || r.grade_level > G) {
      throw ValidationError("grade_level out of range for student '" + r.student_id + "'");
    }
    cohort_of[r.student_id] = r.cohort_year;
    if (r.grade_level == G) has_final_grade.insert(r.student_id);
  }

  PartitionedDataset ds;
  ds.target_cohort = target_cohort;
  ds.max_grade = G;
  ds.course_classes = classes;

  if (target_cohort) {
    bool present = false;
    bool has_target = false;
    for (const auto& r : input) {
      if (r.cohort_year != *target_cohort) continue;
      present = true;
      if (r.grade_level == G) has_target = true;
    }
    if (!present) {
      throw ValidationError("target cohort " + std::to_string(*target_cohort) + " not in data");
    }
    if (!has_target) {
      throw ValidationError("target cohort " + std::to_string(*target_cohort) +
                            " has no grade-" + std::to_string(G) + " records to hold out");
    }
  }

  for (const auto& [student, cohort] : cohort_of) {
    if (target_cohort && cohort == *target_cohort) {
      ds.current_students.insert(student);
    } else if (has_final_grade.count(student)) {
      ds.graduated_students.insert(student);
    } else {
      ds.incomplete_students.insert(student);
    }
  }

  {
    std::vector<std::string> students(ds.graduated_students.begin(), ds.graduated_students.end());
    students.insert(students.end(), ds.current_students.begin(), ds.current_students.end());
    ds.student_index = IdIndex::from_ids(std::move(students));
    std::vector<std::string> courses;
    for (const auto& r : input) courses.push_back(r.course_id);
    ds.course_index = IdIndex::from_ids(std::move(courses));
  }

  ds.advanced_flags.assign(ds.num_courses(), 0);
  for (CourseIndex c = 0; c < ds.num_courses(); ++c) {
    auto it = classes.find(ds.course_index.id(c));
    ds.advanced_flags[c] = (it == classes.end() || it->second.kind == CourseKind::Advanced) ? 1 : 0;
  }
  ds.current_flags.assign(ds.num_students(), 0);
  for (const auto& s : ds.current_students) ds.current_flags[ds.student_index.at(s)] = 1;

  for (const auto& r : input) {
    if (ds.incomplete_students.count(r.student_id)) continue;
    const StudentIndex s = ds.student_index.at(r.student_id);
    const CourseIndex c = ds.course_index.at(r.course_id);
    const bool current = ds.is_current(s);
    const bool advanced = ds.is_advanced(c);
    if (current && r.grade_level == G) {
      ds.heldout.push_back(r);
      continue;
    }
    if (current && advanced) {
      if (options.strict_ar) {
        throw ValidationError("current student '" + r.student_id +
                              "' has a record at advanced course '" + r.course_id + "'");
      }
      ds.excluded_ar.push_back(r);
      continue;
    }
    Block block = current ? Block::FC : (advanced ? Block::AG : Block::FG);
    ds.records.push_back({r, s, c, block});
  }
  return ds;
}

// ---------------------------------------------------------------------------
// Synthetic data

struct SynthConfig {
  int cohorts = 3;
  int students_per_cohort = 100;
  int courses = 120;
  int courses_per_grade = 8;
  double concentration = 0.8;
  int grades = kDefaultGrades;
  int first_cohort_year = 2008;
  /// Interest groups. Each course and each student belongs to one; a student
  /// prefers courses of their own group by `group_affinity`.
  int groups = 6;
  double group_affinity = 8.0;

  void validate() const {
    if (cohorts < 1 || students_per_cohort < 1 || courses < 1 || grades < 1 || groups < 1) {
      throw ValidationError("synthetic config: counts must be positive");
    }
    if (courses_per_grade < 1) throw ValidationError("synthetic config: courses_per_grade < 1");
    if (!(concentration >= 0.0 && concentration <= 1.0)) {
      throw ValidationError("synthetic config: concentration must lie in [0, 1]");
    }
    if (!(group_affinity > 0.0)) throw ValidationError("synthetic config: group_affinity <= 0");
    // Each grade must be fillable from the courses whose home grade it is.
    const int smallest_home_pool = courses / grades;
    if (courses_per_grade > smallest_home_pool) {
      throw ValidationError("synthetic config: courses_per_grade (" +
                            std::to_string(courses_per_grade) + ") exceeds the " +
                            std::to_string(smallest_home_pool) + " courses available per grade");
    }
  }
};

inline int synthetic_home_grade(int course, int grades) { return course % grades + 1; }
inline int synthetic_group(int course, int grades, int groups) { return (course / grades) % groups; }

inline std::string synthetic_course_id(int course) {
  std::string digits = std::to_string(course);
  return "C" + std::string(digits.size() < 3 ? 3 - digits.size() : 0, '0') + digits;
}

/// Registration records with a seniority imbalance: every course has a home
/// grade, and a student at grade g draws a course from the home-g pool with
/// probability `concentration`.
inline std::vector<RegistrationRecord> generate_synthetic(const SynthConfig& config,
                                                          std::uint64_t seed) {
  config.validate();
  Rng rng = make_stream(seed, "synth");
  const int C = config.courses;

  std::vector<RegistrationRecord> records;
  std::vector<char> taken(C);
  std::vector<int> pool;
  std::vector<double> weights;

  for (int k = 0; k < config.cohorts; ++k) {
    const int year = config.first_cohort_year + k;
    for (int i = 0; i < config.students_per_cohort; ++i) {
      std::string digits = std::to_string(i);
      std::string student = "S" + std::to_string(year) + "-" +
                            std::string(digits.size() < 4 ? 4 - digits.size() : 0, '0') + digits;
      const int group = static_cast<int>(rng.below(config.groups));
      std::fill(taken.begin(), taken.end(), 0);
      for (int g = 1; g <= config.grades; ++g) {
        for (int pick = 0; pick < config.courses_per_grade; ++pick) {
          bool home = rng.uniform() < config.concentration;
          auto fill_pool = [&](bool want_home) {
            pool.clear();
            weights.clear();
            for (int c = 0; c < C; ++c) {
              if (taken[c]) continue;
              if ((synthetic_home_grade(c, config.grades) == g) != want_home) continue;
              pool.push_back(c);
              weights.push_back(synthetic_group(c, config.grades, config.groups) == group
                                    ? config.group_affinity
                                    : 1.0);
            }
          };
          fill_pool(home);
          if (pool.empty()) fill_pool(!home);
          if (pool.empty()) throw ValidationError("synthetic config: ran out of courses");
          double total = 0.0;
          for (double w : weights) total += w;
          double u = rng.uniform() * total;
          std::size_t chosen = pool.size() - 1;
          for (std::size_t p = 0; p < pool.size(); ++p) {
            if (u < weights[p]) {
              chosen = p;
              break;
            }
            u -= weights[p];
          }
          taken[pool[chosen]] = 1;
          records.push_back({student, synthetic_course_id(pool[chosen]), year, g});
        }
      }
    }
  }
  return records;
}

}  // namespace ocrank
