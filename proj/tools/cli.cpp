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

#include "cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ocrank/ocrank.hpp"

namespace ocrank::cli {
namespace {

namespace fs = std::filesystem;

std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  return out;
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  return in;
}

/// Writes the fully resolved options of a subcommand as key=value lines.
void echo_config(const CLI::App& sub, const fs::path& dir) {
  auto out = open_output(dir / "effective_config.txt");
  out << sub.config_to_str(true, false);
}

struct SplitFlags {
  std::optional<int> target_cohort;
  int advanced_grade = 3;
  double dominance = 0.5;
  int grades = kDefaultGrades;
  bool strict_ar = false;

  SplitOptions options() const {
    SplitOptions o;
    o.classify.advanced_grade = advanced_grade;
    o.classify.dominance = dominance;
    o.classify.max_grade = grades;
    o.partition.max_grade = grades;
    o.partition.strict_ar = strict_ar;
    return o;
  }
};

void add_split_flags(CLI::App* sub, SplitFlags& flags, bool require_target) {
  auto* target = sub->add_option("--target-cohort", flags.target_cohort,
                                 "Cohort whose final-year registrations are held out");
  if (require_target) target->required();
  sub->add_option("--advanced-grade", flags.advanced_grade, "Lowest grade counted as advanced")
      ->capture_default_str();
  sub->add_option("--dominance", flags.dominance, "Advanced-grade share that makes a course advanced")
      ->capture_default_str();
  sub->add_option("--grades", flags.grades, "Number of grade levels")->capture_default_str();
  sub->add_flag("--strict-ar", flags.strict_ar,
                "Fail on current-student records at advanced courses instead of dropping them");
}

PartitionedDataset load_split(const std::string& path, const SplitFlags& flags) {
  return prepare_split(load_records(path, flags.grades), flags.target_cohort, flags.options());
}

std::string kind_name(CourseKind kind) { return kind == CourseKind::Advanced ? "advanced" : "fundamental"; }

// ---------------------------------------------------------------------------

struct GenerateArgs {
  SynthConfig synth;
  std::uint64_t seed = 0;
  std::string out;
};

void run_generate(const CLI::App& sub, const GenerateArgs& a, std::ostream& out) {
  auto records = generate_synthetic(a.synth, a.seed);
  fs::path dir(a.out);
  auto file = open_output(dir / "records.csv");
  write_records(file, records);
  echo_config(sub, dir);
  out << "wrote " << records.size() << " records to " << (dir / "records.csv").string() << '\n';
}

struct PartitionArgs {
  std::string in;
  SplitFlags split;
  std::string out;
};

void run_partition(const CLI::App& sub, const PartitionArgs& a, std::ostream& out) {
  auto ds = load_split(a.in, a.split);
  fs::path dir(a.out);
  {
    auto f = open_output(dir / "train.csv");
    write_records(f, ds.observed_records());
  }
  {
    auto f = open_output(dir / "heldout.csv");
    write_records(f, ds.heldout);
  }
  std::map<Block, std::size_t> counts;
  {
    auto f = open_output(dir / "blocks.tsv");
    for (const auto& r : ds.records) {
      f << r.record.student_id << '\t' << r.record.course_id << '\t' << r.record.cohort_year << '\t'
        << r.record.grade_level << '\t' << block_name(r.block) << '\n';
      ++counts[r.block];
    }
  }
  {
    auto f = open_output(dir / "classes.tsv");
    for (const auto& [id, cls] : ds.course_classes) {
      f << id << '\t' << kind_name(cls.kind) << '\t' << cls.dominant_grade << '\t'
        << format_double(cls.dominance_fraction) << '\t' << format_double(cls.advanced_fraction) << '\n';
    }
  }
  echo_config(sub, dir);
  out << "students: " << ds.graduated_students.size() << " graduated, " << ds.current_students.size()
      << " current, " << ds.incomplete_students.size() << " incomplete (ignored)\n";
  out << "blocks: FG=" << counts[Block::FG] << " AG=" << counts[Block::AG] << " FC=" << counts[Block::FC]
      << "\n";
  out << "held out: " << ds.heldout.size() << "; current-student advanced records dropped: "
      << ds.excluded_ar.size() << '\n';
}

struct BuildGraphArgs {
  std::string in;
  double threshold = 0.03;
  int grades = kDefaultGrades;
  std::string out;
};

void run_build_graph(const CLI::App& sub, const BuildGraphArgs& a, std::ostream& out) {
  auto full = build_network(load_records(a.in, a.grades));
  auto network = apply_threshold(full, a.threshold);
  fs::path dir(a.out);
  auto f = open_output(dir / "graph.tsv");
  write_network(f, network);
  echo_config(sub, dir);
  out << "nodes: " << network.num_nodes() << "; edges: " << full.num_edges() << " -> "
      << network.num_edges() << " after threshold " << a.threshold << "; average out-degree "
      << full.average_out_degree() << " -> " << network.average_out_degree() << '\n';
}

TransitionNetwork load_network(const std::string& path, const IdIndex& courses) {
  auto in = open_input(path);
  return read_network(in, courses);
}

struct TrainArgs {
  std::string in;
  SplitFlags split;
  std::string method = "two-stage";
  bool cdr = false;
  std::string graph;
  Hyperparameters hyper;
  int stage2_epochs = -1;
  double stage2_alpha = -1.0;
  bool reinit_current = false;
  std::string out;
};

void run_train(const CLI::App& sub, const TrainArgs& a, std::ostream& out) {
  if (a.cdr && a.graph.empty()) throw CLI::ValidationError("--cdr requires --graph");
  auto ds = load_split(a.in, a.split);
  std::optional<TransitionNetwork> network;
  if (a.cdr) network = load_network(a.graph, ds.course_index);
  TrainOptions options;
  options.stage2_epochs = a.stage2_epochs;
  options.stage2_alpha = a.stage2_alpha;
  options.reinit_current = a.reinit_current;
  const TransitionNetwork* net = network ? &*network : nullptr;
  FactorModel model = a.method == "bpr" ? train_single_stage(ds, a.hyper, net, options)
                                        : train_two_stage(ds, a.hyper, net, options);
  fs::path dir(a.out);
  auto f = open_output(dir / "model.txt");
  write_model(f, model, ds.student_index, ds.course_index);
  echo_config(sub, dir);
  out << "trained " << a.method << (a.cdr ? " + CDR" : "") << ": " << model.num_students()
      << " students, " << model.num_courses() << " courses, K=" << model.K() << '\n';
}

struct RecommendArgs {
  std::string model;
  std::string in;
  SplitFlags split;
  bool ppr = false;
  std::string graph;
  double gamma = 0.7;
  bool full_history = false;
  std::string baseline;
  std::string student;
  std::size_t top = 10;
  std::string out;
};

void run_recommend(const RecommendArgs& a, std::ostream& out) {
  auto ds = load_split(a.in, a.split);
  std::optional<SavedModel> saved;
  std::optional<TransitionNetwork> network;
  Recommender recommender;
  if (a.ppr) {
    if (a.graph.empty()) throw CLI::ValidationError("--ppr requires --graph");
    network = load_network(a.graph, ds.course_index);
    recommender = ppr_recommender(*network, ds, a.gamma, a.full_history);
  } else if (!a.baseline.empty()) {
    if (a.baseline == "popularity") {
      recommender = popularity_recommender(ds);
    } else {
      recommender = memory_recommender(
          ds, a.baseline == "jaccard" ? SimilarityKind::Jaccard : SimilarityKind::Intersection);
    }
  } else {
    if (a.model.empty()) throw CLI::ValidationError("need --model, --ppr or --baseline");
    auto in = open_input(a.model);
    saved = read_model(in);
    if (!(saved->students == ds.student_index) || !(saved->courses == ds.course_index)) {
      throw ValidationError("model ids do not match the dataset; train and recommend on the same split");
    }
    recommender = cf_recommender(saved->model);
  }

  auto table = score_table(recommender, ds);
  if (!a.student.empty()) {
    auto it = table.find(a.student);
    if (it == table.end()) throw ValidationError("'" + a.student + "' is not a current student");
    ScoreTable single{{it->first, it->second}};
    table.swap(single);
  }
  if (!a.out.empty()) {
    auto f = open_output(a.out);
    write_scores(f, table);
    out << "wrote scores for " << table.size() << " students to " << a.out << '\n';
    return;
  }
  for (const auto& [student, row] : table) {
    ScoredRanking ranking;
    for (const auto& [course, value] : row) ranking.push_back({ds.course_index.at(course), value});
    sort_ranking(ranking, ds.course_index);
    out << student << ':';
    for (std::size_t n = 0; n < std::min(a.top, ranking.size()); ++n) {
      out << ' ' << ds.course_index.id(ranking[n].course) << '(' << format_double(ranking[n].score) << ')';
    }
    out << '\n';
  }
}

EvaluationReport evaluate_file(const std::string& scores, const std::string& truth, int grades) {
  auto in = open_input(scores);
  return evaluate_scores(read_scores(in), load_records(truth, grades));
}

struct EvaluateArgs {
  std::string scores;
  std::string truth;
  int grades = kDefaultGrades;
  std::string out;
};

void run_evaluate(const EvaluateArgs& a, std::ostream& out) {
  auto report = evaluate_file(a.scores, a.truth, a.grades);
  out << std::setprecision(6) << "mean AUC " << report.mean_auc << " over "
      << report.per_student_auc.size() << " students (" << report.num_skipped << " skipped)\n";
  if (!a.out.empty()) {
    auto f = open_output(fs::path(a.out) / "per_student_auc.tsv");
    write_auc_report(f, report);
  }
}

struct CompareArgs {
  std::string a;
  std::string b;
  std::string truth;
  int grades = kDefaultGrades;
};

void run_compare(const CompareArgs& args, std::ostream& out) {
  auto ra = evaluate_file(args.a, args.truth, args.grades);
  auto rb = evaluate_file(args.b, args.truth, args.grades);
  std::vector<double> va, vb;
  for (const auto& [student, value] : ra.per_student_auc) {
    auto it = rb.per_student_auc.find(student);
    if (it == rb.per_student_auc.end()) continue;
    va.push_back(value);
    vb.push_back(it->second);
  }
  auto test = paired_test(va, vb);
  out << std::setprecision(6) << "A mean AUC " << ra.mean_auc << "\nB mean AUC " << rb.mean_auc
      << "\npaired students " << test.n << ", mean(B - A) " << test.mean_difference
      << "\npaired t-test p-value (B > A) " << test.t_p_value << "\nsign test p-value (B > A) "
      << test.sign_p_value << '\n';
}

struct EnsembleArgs {
  std::string cf;
  std::string ppr;
  std::string truth;
  std::string model;
  double reg_c = 1.0;
  int epochs = 200;
  std::uint64_t seed = 0;
  int grades = kDefaultGrades;
  std::string apply_cf;
  std::string apply_ppr;
  std::string out;
};

ScoreTable load_scores(const std::string& path) {
  auto in = open_input(path);
  return read_scores(in);
}

void run_ensemble(const CLI::App& sub, const EnsembleArgs& a, std::ostream& out) {
  fs::path dir(a.out);
  RankSvmModel model;
  if (!a.model.empty()) {
    auto in = open_input(a.model);
    model = read_ensemble(in);
  } else {
    if (a.cf.empty() || a.ppr.empty() || a.truth.empty()) {
      throw CLI::ValidationError("training needs --cf, --ppr and --truth (or pass --model)");
    }
    auto pairs = make_ranking_pairs(load_scores(a.cf), load_scores(a.ppr), load_records(a.truth, a.grades),
                                    a.seed);
    model = train_ranksvm(pairs, a.reg_c, a.epochs, a.seed);
    auto f = open_output(dir / "ensemble.txt");
    write_ensemble(f, model);
    out << "trained RankSVM on " << pairs.size() << " pairs: w = (" << format_double(model.weight[0])
        << ", " << format_double(model.weight[1]) << ")\n";
  }
  if (!a.apply_cf.empty() || !a.apply_ppr.empty()) {
    if (a.apply_cf.empty() || a.apply_ppr.empty()) {
      throw CLI::ValidationError("--apply-cf and --apply-ppr go together");
    }
    auto table = ensemble_table(model, load_scores(a.apply_cf), load_scores(a.apply_ppr));
    auto f = open_output(dir / "scores.tsv");
    write_scores(f, table);
    out << "wrote ensemble scores for " << table.size() << " students\n";
  }
  echo_config(sub, dir);
}

bool given(const std::vector<std::string>& args, const std::string& flag) {
  return std::any_of(args.begin(), args.end(),
                     [&](const std::string& a) { return a == flag || a.rfind(flag + "=", 0) == 0; });
}

/// Replaces `--config FILE` with `--key=value` arguments for every key not
/// already given on the command line. CLI11 only reads config files attached
/// to the top-level app, so subcommand configs are expanded here.
std::vector<std::string> expand_config(std::vector<std::string> args) {
  std::string file;
  for (std::size_t n = 0; n < args.size(); ++n) {
    if (args[n] == "--config") {
      if (n + 1 >= args.size()) throw CLI::ArgumentMismatch("--config", 1, 0);
      file = args[n + 1];
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(n), args.begin() + static_cast<std::ptrdiff_t>(n) + 2);
      break;
    }
    if (args[n].rfind("--config=", 0) == 0) {
      file = args[n].substr(9);
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(n));
      break;
    }
  }
  if (file.empty()) return args;
  std::vector<std::string> extra;
  for (const auto& item : CLI::ConfigINI().from_file(file)) {
    if (item.name == "++" || item.name == "--") continue;  // section markers
    const std::string flag = "--" + item.fullname();
    if (given(args, flag)) continue;
    if (item.inputs.empty()) {
      extra.push_back(flag);
    } else {
      for (const auto& value : item.inputs) extra.push_back(flag + "=" + value);
    }
  }
  args.insert(args.end(), extra.begin(), extra.end());
  return args;
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"ocrank: one-class course recommendation toolkit"};
  app.require_subcommand(1);

  auto config_option = [](CLI::App* sub) {
    // Expanded by expand_config before parsing; registered for the help text.
    sub->add_option("--config", "key=value file; keys are long flag names, flags win");
  };

  GenerateArgs gen;
  auto* generate = app.add_subcommand("generate", "Generate synthetic registration records");
  config_option(generate);
  generate->add_option("--seed", gen.seed)->capture_default_str();
  generate->add_option("--out", gen.out, "Output directory")->required();
  generate->add_option("--cohorts", gen.synth.cohorts)->capture_default_str();
  generate->add_option("--students-per-cohort", gen.synth.students_per_cohort)->capture_default_str();
  generate->add_option("--courses", gen.synth.courses)->capture_default_str();
  generate->add_option("--courses-per-grade", gen.synth.courses_per_grade)->capture_default_str();
  generate->add_option("--concentration", gen.synth.concentration)->capture_default_str();
  generate->add_option("--grades", gen.synth.grades)->capture_default_str();
  generate->add_option("--first-cohort-year", gen.synth.first_cohort_year)->capture_default_str();
  generate->add_option("--groups", gen.synth.groups)->capture_default_str();
  generate->add_option("--group-affinity", gen.synth.group_affinity)->capture_default_str();

  PartitionArgs part;
  auto* partition_cmd = app.add_subcommand("partition", "Split records into FG/AG/FC blocks and held-out truth");
  config_option(partition_cmd);
  partition_cmd->add_option("--in", part.in, "Registration CSV")->required();
  add_split_flags(partition_cmd, part.split, false);
  partition_cmd->add_option("--out", part.out, "Output directory")->required();

  BuildGraphArgs graph;
  auto* build_graph = app.add_subcommand("build-graph", "Build the course transition network");
  config_option(build_graph);
  build_graph->add_option("--in", graph.in, "Registration CSV (observed history)")->required();
  build_graph->add_option("--threshold", graph.threshold, "Minimum edge weight T")->capture_default_str();
  build_graph->add_option("--grades", graph.grades)->capture_default_str();
  build_graph->add_option("--out", graph.out, "Output directory")->required();

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Train a BPR-MF model");
  config_option(train_cmd);
  train_cmd->add_option("--in", train.in, "Registration CSV")->required();
  add_split_flags(train_cmd, train.split, true);
  train_cmd->add_option("--method", train.method)
      ->check(CLI::IsMember({"bpr", "two-stage"}))
      ->capture_default_str();
  train_cmd->add_flag("--cdr", train.cdr, "Regularize with the transition network");
  train_cmd->add_option("--graph", train.graph, "Edge list from build-graph");
  train_cmd->add_option("--epochs", train.hyper.epochs)->capture_default_str();
  train_cmd->add_option("--k", train.hyper.K, "Latent dimension")->capture_default_str();
  train_cmd->add_option("--lambda", train.hyper.lambda)->capture_default_str();
  train_cmd->add_option("--alpha", train.hyper.alpha)->capture_default_str();
  train_cmd->add_option("--beta", train.hyper.beta)->capture_default_str();
  train_cmd->add_option("--seed", train.hyper.seed)->capture_default_str();
  train_cmd->add_option("--stage2-epochs", train.stage2_epochs, "Negative: same as --epochs")
      ->capture_default_str();
  train_cmd->add_option("--stage2-alpha", train.stage2_alpha, "Negative: same as --alpha")
      ->capture_default_str();
  train_cmd->add_flag("--reinit-current", train.reinit_current,
                      "Reinitialize current students before stage 2");
  train_cmd->add_option("--out", train.out, "Output directory")->required();

  RecommendArgs rec;
  auto* recommend = app.add_subcommand("recommend", "Score untaken courses for current students");
  config_option(recommend);
  recommend->add_option("--model", rec.model, "Model file from train");
  recommend->add_option("--in", rec.in, "Registration CSV used for training")->required();
  add_split_flags(recommend, rec.split, true);
  recommend->add_flag("--ppr", rec.ppr, "Rank by personalized PageRank instead of the model");
  recommend->add_option("--graph", rec.graph, "Edge list from build-graph");
  recommend->add_option("--gamma", rec.gamma, "PPR damping factor")->capture_default_str();
  recommend->add_flag("--full-history", rec.full_history, "Restart PPR from all past courses");
  recommend->add_option("--baseline", rec.baseline)
      ->check(CLI::IsMember({"popularity", "intersection", "jaccard"}));
  recommend->add_option("--student", rec.student, "Only this student");
  recommend->add_option("--top", rec.top, "Courses printed per student")->capture_default_str();
  recommend->add_option("--out", rec.out, "Score file (student<TAB>course<TAB>score)");

  EvaluateArgs eval;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Per-student AUC of a score file");
  config_option(evaluate_cmd);
  evaluate_cmd->add_option("--scores", eval.scores)->required();
  evaluate_cmd->add_option("--truth", eval.truth, "Held-out registrations CSV")->required();
  evaluate_cmd->add_option("--grades", eval.grades)->capture_default_str();
  evaluate_cmd->add_option("--out", eval.out, "Directory for per_student_auc.tsv");

  CompareArgs cmp;
  auto* compare = app.add_subcommand("compare", "Paired comparison of two score files");
  config_option(compare);
  compare->add_option("--a", cmp.a, "Baseline scores")->required();
  compare->add_option("--b", cmp.b, "Candidate scores")->required();
  compare->add_option("--truth", cmp.truth, "Held-out registrations CSV")->required();
  compare->add_option("--grades", cmp.grades)->capture_default_str();

  EnsembleArgs ens;
  auto* ensemble = app.add_subcommand("ensemble", "Train and apply the RankSVM ensemble");
  config_option(ensemble);
  ensemble->add_option("--cf", ens.cf, "CF scores on the validation cohort");
  ensemble->add_option("--ppr", ens.ppr, "PPR scores on the validation cohort");
  ensemble->add_option("--truth", ens.truth, "Validation held-out registrations CSV");
  ensemble->add_option("--model", ens.model, "Existing ensemble file; skips training");
  ensemble->add_option("--reg-c", ens.reg_c)->capture_default_str();
  ensemble->add_option("--epochs", ens.epochs)->capture_default_str();
  ensemble->add_option("--seed", ens.seed)->capture_default_str();
  ensemble->add_option("--grades", ens.grades)->capture_default_str();
  ensemble->add_option("--apply-cf", ens.apply_cf, "CF scores to combine");
  ensemble->add_option("--apply-ppr", ens.apply_ppr, "PPR scores to combine");
  ensemble->add_option("--out", ens.out, "Output directory")->required();

  try {
    // CLI11 consumes arguments from the back; drop the program name.
    auto reversed = expand_config({args.begin() + (args.empty() ? 0 : 1), args.end()});
    std::reverse(reversed.begin(), reversed.end());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (generate->parsed()) run_generate(*generate, gen, out);
    if (partition_cmd->parsed()) run_partition(*partition_cmd, part, out);
    if (build_graph->parsed()) run_build_graph(*build_graph, graph, out);
    if (train_cmd->parsed()) run_train(*train_cmd, train, out);
    if (recommend->parsed()) run_recommend(rec, out);
    if (evaluate_cmd->parsed()) run_evaluate(eval, out);
    if (compare->parsed()) run_compare(cmp, out);
    if (ensemble->parsed()) run_ensemble(*ensemble, ens, out);
  } catch (const CLI::ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace ocrank::cli
