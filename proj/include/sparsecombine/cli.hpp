#pragma once

// Command-line front end. Subcommands: study, verify, plan, solve.
//
// Exit codes: 0 ok, 1 verification failure, 2 node budget exceeded,
// 3 bad configuration, 4 runtime failure (solver error, I/O).

#include "sparsecombine/evaluate.hpp"
#include "sparsecombine/pde.hpp"
#include "sparsecombine/plan.hpp"
#include "sparsecombine/study.hpp"
#include "sparsecombine/verify.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

namespace sparsecombine::cli {

enum ExitCode : int { kOk = 0, kVerifyFailed = 1, kBudgetExceeded = 2, kBadConfig = 3, kRuntimeFailure = 4 };

inline constexpr const char* kBudgetEnv = "SPARSECOMBINE_BUDGET";

inline std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, sep)) parts.push_back(item);
  return parts;
}

inline Point parse_point(const std::string& text, int d) {
  if (text == "auto") return default_eval_point(d);
  Point x;
  for (const auto& part : split(text, ',')) {
    std::size_t used = 0;
    const double v = std::stod(part, &used);
    if (used != part.size()) throw std::invalid_argument("bad coordinate '" + part + "'");
    x.coords.push_back(v);
  }
  if (x.dim() != d) throw std::invalid_argument("point must have " + std::to_string(d) + " coordinates");
  if (!x.in_unit_cube()) throw std::invalid_argument("point outside [0,1]^d");
  return x;
}

inline std::vector<int> parse_levels(const std::string& text) {
  std::vector<int> levels;
  for (const auto& part : split(text, ',')) {
    std::size_t used = 0;
    levels.push_back(std::stoi(part, &used));
    if (used != part.size()) throw std::invalid_argument("bad level '" + part + "'");
  }
  return levels;
}

inline unsigned parse_parallel(const std::string& text) {
  if (text == "auto") return 0;
  const int v = std::stoi(text);
  if (v < 1) throw std::invalid_argument("--parallel must be >= 1 or 'auto'");
  return static_cast<unsigned>(v);
}

inline std::uint64_t default_budget() {
  if (const char* env = std::getenv(kBudgetEnv)) {
    try {
      const double v = std::stod(env);
      if (v >= 1) return static_cast<std::uint64_t>(v);
    } catch (const std::exception&) {
    }
    throw std::invalid_argument(std::string(kBudgetEnv) + " must be a positive number");
  }
  return 50'000'000;
}

struct StudyArgs {
  std::string method;
  int dim = 2;
  int n_min = 1;
  int n_max = 6;
  std::string point = "auto";
  int level_shift = 1;
  double budget = 0;  // 0: environment or default
  std::string parallel = "auto";
  std::string format = "csv";
  std::string out = "-";
  std::uint64_t seed = 20240917;
  int surplus_points = 0;
};

inline int cmd_study(const StudyArgs& args, std::ostream& out, std::ostream& err) {
  StudyConfig cfg;
  try {
    cfg.method = parse_method(args.method);
    cfg.dim = args.dim;
    cfg.n_min = args.n_min;
    cfg.n_max = args.n_max;
    cfg.eval_point = parse_point(args.point, args.dim);
    cfg.level_shift = args.level_shift;
    cfg.node_budget = args.budget > 0 ? static_cast<std::uint64_t>(args.budget) : default_budget();
    cfg.parallelism = parse_parallel(args.parallel);
    cfg.seed = args.seed;
    cfg.surplus_points = args.surplus_points;
    if (args.format != "csv" && args.format != "json") throw std::invalid_argument("--format must be csv or json");
    validate(cfg);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kBadConfig;
  }

  std::ofstream file;
  std::ostream* sink = &out;
  if (args.out != "-") {
    file.open(args.out);
    if (!file) {
      err << "error: cannot open " << args.out << '\n';
      return kRuntimeFailure;
    }
    sink = &file;
  }

  const bool csv = args.format == "csv";
  if (csv) *sink << kCsvHeader << '\n' << std::flush;
  StudyResult result;
  try {
    result = hierarchical_surplus_study(builtin_sine_problem(cfg.dim), cfg, [&](const ConvergenceRecord& r) {
      if (csv) *sink << to_csv_row(r) << '\n' << std::flush;
    });
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRuntimeFailure;
  }
  if (!csv) *sink << study_to_json(cfg, result).dump(2) << '\n';
  sink->flush();
  // CSV has a fixed schema, so run metadata goes to stderr.
  err << "# method=" << to_string(cfg.method) << " d=" << cfg.dim << " level_shift=" << cfg.level_shift << " point=";
  for (std::size_t j = 0; j < result.eval_point.coords.size(); ++j)
    err << (j ? "," : "") << result.eval_point.coords[j];
  err << " seed=" << cfg.seed << " records=" << result.records.size() << '\n';
  if (result.budget_exceeded) {
    err << "error: " << result.message << '\n';
    return kBudgetExceeded;
  }
  return kOk;
}

struct VerifyArgs {
  int d_max = 10;
  int lemma_d_max = 8;
  int trials = 100;
  std::uint64_t seed = 20240917;
  std::string perturb_alpha1;  // test hook: multiply alpha_1 by this rational
};

inline int cmd_verify(const VerifyArgs& args, std::ostream& out, std::ostream& err) {
  if (args.d_max < 1 || args.d_max > 32 || args.lemma_d_max < 0 || args.trials < 1) {
    err << "error: need 1 <= d-max <= 32, lemma-d-max >= 0, trials >= 1\n";
    return kBadConfig;
  }
  std::function<WeightOverride(int)> weights;
  if (!args.perturb_alpha1.empty()) {
    Rational factor;
    try {
      factor = Rational::parse(args.perturb_alpha1);
    } catch (const std::exception& e) {
      err << "error: " << e.what() << '\n';
      return kBadConfig;
    }
    weights = [factor](int d) -> WeightOverride {
      auto alpha = extrapolation_weights(d);
      alpha[1] *= factor;
      return alpha;
    };
  }

  const auto reports =
      run_identity_checks(args.d_max, std::min(args.d_max, args.lemma_d_max), args.trials, args.seed, weights);
  bool all_pass = true;
  out << std::left << std::setw(22) << "identity" << std::setw(5) << "d" << std::setw(28) << "defect"
      << "pass\n";
  for (const auto& r : reports) {
    std::string defect = r.exact_defect.to_string();
    if (r.float_defect) {
      std::ostringstream fp;
      fp << std::setprecision(3) << *r.float_defect;
      defect += " (fp " + fp.str() + ")";
    }
    out << std::left << std::setw(22) << to_string(r.identity) << std::setw(5) << r.d << std::setw(28) << defect
        << (r.pass ? "yes" : "NO") << '\n';
    all_pass = all_pass && r.pass;
  }
  for (int d = 1; d <= std::min(args.d_max, 4); ++d) {
    bool ok = true;
    for (int n = 0; n <= 6; ++n) ok = ok && check_hosg_vs_bl_export(d, n).pass();
    out << std::left << std::setw(22) << "ho_plan_closed_form" << std::setw(5) << d << std::setw(28)
        << (ok ? "0" : "mismatch") << (ok ? "yes" : "NO") << '\n';
    all_pass = all_pass && ok;
  }
  out << (all_pass ? "all checks passed\n" : "verification FAILED\n");
  return all_pass ? kOk : kVerifyFailed;
}

struct PlanArgs {
  int dim = 2;
  int n = 1;
  std::string kind = "standard";
  int level_shift = 0;
};

inline int cmd_plan(const PlanArgs& args, std::ostream& out, std::ostream& err) {
  try {
    CombinationPlan plan;
    if (args.kind == "standard")
      plan = standard_plan(args.dim, args.n);
    else if (args.kind == "ho")
      plan = ho_plan(args.dim, args.n);
    else
      throw std::invalid_argument("--kind must be standard or ho");
    if (args.level_shift < 0) throw std::invalid_argument("--level-shift must be >= 0");
    out << plan_to_json(plan.shifted(args.level_shift)).dump(2) << '\n';
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kBadConfig;
  }
  return kOk;
}

struct SolveArgs {
  std::string levels;
  std::string point = "auto";
  std::string out;  // optional grid cache file
};

inline int cmd_solve(const SolveArgs& args, std::ostream& out, std::ostream& err) {
  LevelIndex level;
  Point x;
  try {
    level = LevelIndex(parse_levels(args.levels));
    x = parse_point(args.point, level.dim());
    if (level.min() < 1) throw DegenerateGridError(level.to_string());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kBadConfig;
  }
  try {
    const ProblemSpec p = builtin_sine_problem(level.dim());
    const PoissonSolution sol = solve_poisson(p, level);
    const double value = multilinear_eval(sol.grid, x);
    nlohmann::json j{{"levels", std::vector<int>(level.levels().begin(), level.levels().end())},
                     {"nodes", level.node_count()},
                     {"point", x.coords},
                     {"value", value},
                     {"exact", (*p.exact)(x)},
                     {"residual_inf", sol.report.residual_inf},
                     {"solve_seconds", sol.report.solve_seconds}};
    if (!args.out.empty()) {
      std::ofstream file(args.out, std::ios::binary);
      if (!file) throw std::runtime_error("cannot open " + args.out);
      write_grid_function(file, sol.grid);
      j["cache_file"] = args.out;
    }
    out << j.dump(2) << '\n';
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRuntimeFailure;
  }
  return kOk;
}

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Sparse-grid combination technique with multivariate extrapolation", "sparsecombine"};
  app.require_subcommand(1);

  StudyArgs study;
  auto* s = app.add_subcommand("study", "Convergence study on the sine test problem");
  s->add_option("--method", study.method, "FG, HOFG, SG, HOSG or SPLIT2D")->required();
  s->add_option("--dim", study.dim, "Dimension d");
  s->add_option("--n-min", study.n_min, "First level");
  s->add_option("--n-max", study.n_max, "Last level");
  s->add_option("--point", study.point, "Evaluation point 'x1,x2,...' or 'auto' (0.25,0.5,...)");
  s->add_option("--level-shift", study.level_shift, "Offset added to Smolyak levels (0 or 1)");
  s->add_option("--budget", study.budget, "Cap on unique grid nodes per level (default $SPARSECOMBINE_BUDGET or 5e7)");
  s->add_option("--parallel", study.parallel, "Worker threads or 'auto'");
  s->add_option("--format", study.format, "csv or json");
  s->add_option("--out", study.out, "Output file, '-' for stdout");
  s->add_option("--seed", study.seed, "Seed for the surplus point set");
  s->add_option("--surplus-points", study.surplus_points, "Extra random points for a max-surplus");

  VerifyArgs verify;
  auto* v = app.add_subcommand("verify", "Exact checks of the extrapolation weight identities");
  v->add_option("--d-max,--dim", verify.d_max, "Largest dimension for the exact identities");
  v->add_option("--lemma-d-max", verify.lemma_d_max, "Largest dimension for the lemma check");
  v->add_option("--trials", verify.trials, "Random beta tables per dimension");
  v->add_option("--seed", verify.seed, "Seed for the beta tables");
  v->add_option("--perturb-alpha1", verify.perturb_alpha1, "Multiply alpha_1 by this rational (test hook)")
      ->group("");

  PlanArgs plan;
  auto* p = app.add_subcommand("plan", "Print a combination plan as JSON");
  p->add_option("--dim", plan.dim, "Dimension d");
  p->add_option("--n", plan.n, "Level n");
  p->add_option("--kind", plan.kind, "standard or ho");
  p->add_option("--level-shift", plan.level_shift, "Offset added to every level");

  SolveArgs solve;
  auto* g = app.add_subcommand("solve", "Solve the sine problem on one grid");
  g->add_option("--levels", solve.levels, "Comma-separated levels, e.g. 3,4")->required();
  g->add_option("--point", solve.point, "Evaluation point or 'auto'");
  g->add_option("--out", solve.out, "Write the grid function to this binary file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    for (const auto* sub : {s, v, p, g})
      if (sub->parsed()) {
        out << sub->help();
        return kOk;
      }
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kBadConfig;
  }

  if (s->parsed()) return cmd_study(study, out, err);
  if (v->parsed()) return cmd_verify(verify, out, err);
  if (p->parsed()) return cmd_plan(plan, out, err);
  if (g->parsed()) return cmd_solve(solve, out, err);
  return kBadConfig;
}

}  // namespace sparsecombine::cli
