#pragma once

// Convergence studies: FG, HO-FG (Richardson), SG, HO-SG and the 2D
// splitting extrapolation, evaluated level by level with the hierarchical
// surplus |u_{n+1}(x*) - u_n(x*)| as error proxy.

#include "sparsecombine/errors.hpp"
#include "sparsecombine/evaluate.hpp"
#include "sparsecombine/plan.hpp"

#include <nlohmann/json.hpp>

#include <cctype>
#include <cmath>
#include <cstdio>
#include <functional>
#include <optional>
#include <ostream>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace sparsecombine {

enum class Method { FG, HOFG, SG, HOSG, SPLIT2D };

inline std::string to_string(Method m) {
  switch (m) {
    case Method::FG: return "FG";
    case Method::HOFG: return "HOFG";
    case Method::SG: return "SG";
    case Method::HOSG: return "HOSG";
    case Method::SPLIT2D: return "SPLIT2D";
  }
  return "?";
}

inline Method parse_method(const std::string& name) {
  std::string upper;
  for (char c : name) {
    if (c == '-' || c == '_') continue;
    upper += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  }
  if (upper == "FG") return Method::FG;
  if (upper == "HOFG") return Method::HOFG;
  if (upper == "SG") return Method::SG;
  if (upper == "HOSG") return Method::HOSG;
  if (upper == "SPLIT2D" || upper == "SPLIT") return Method::SPLIT2D;
  throw std::invalid_argument("unknown method '" + name + "'");
}

/// x* = (0.25, 0.5, 0.25, 0.5, ...) truncated to d entries.
inline Point default_eval_point(int d) {
  Point x;
  for (int j = 0; j < d; ++j) x.coords.push_back(j % 2 == 0 ? 0.25 : 0.5);
  return x;
}

/// {(n,...,n): -1/3, (n+1,...,n+1): 4/3}
inline CombinationPlan richardson_plan(int d, int n) {
  if (n < 1) throw std::invalid_argument("richardson: n must be >= 1");
  CombinationPlan plan(d, "richardson", n);
  plan.add(LevelIndex::isotropic(d, n), Rational(-1, 3));
  plan.add(LevelIndex::isotropic(d, n + 1), Rational(4, 3));
  return plan;
}

/// 4/3 u^{(1)} + 4/3 u^{(2)} - 5/3 u_h around base level `l`.
inline CombinationPlan splitting_plan(const LevelIndex& l) {
  if (l.dim() != 2) throw std::invalid_argument("splitting extrapolation is defined for d = 2 only");
  CombinationPlan plan(2, "splitting");
  plan.add(l, Rational(-5, 3));
  const int first[] = {0};
  const int second[] = {1};
  plan.add(l.refine(first), Rational(4, 3));
  plan.add(l.refine(second), Rational(4, 3));
  return plan;
}

/// Plan for `method` at level n. `level_shift` applies to the Smolyak-based
/// methods only.
inline CombinationPlan method_plan(Method method, int d, int n, int level_shift) {
  switch (method) {
    case Method::FG: {
      if (n < 1) throw std::invalid_argument("FG: n must be >= 1");
      CombinationPlan plan(d, "full", n);
      plan.add(LevelIndex::isotropic(d, n), Rational{1});
      return plan;
    }
    case Method::HOFG: return richardson_plan(d, n);
    case Method::SG: return standard_plan(d, n).shifted(level_shift);
    case Method::HOSG: return ho_plan(d, n).shifted(level_shift);
    case Method::SPLIT2D:
      if (n < 1) throw std::invalid_argument("SPLIT2D: n must be >= 1");
      return splitting_plan(LevelIndex::isotropic(d, n));
  }
  throw std::invalid_argument("method_plan: bad method");
}

namespace detail {

/// Sum of node counts over {i : i_j >= floor, lo <= |i| <= hi, |i| - e(i) <= cap},
/// e(i) = #{j : i_j > floor}. Computed by dynamic programming over directions.
inline double count_nodes(int d, int floor, int lo, int hi, int cap) {
  // dp[s][e]: summed node products over the first k directions
  const int max_sum = hi;
  std::vector<std::vector<double>> dp(static_cast<std::size_t>(max_sum + 1),
                                      std::vector<double>(static_cast<std::size_t>(d + 1), 0.0));
  dp[0][0] = 1.0;
  for (int k = 0; k < d; ++k) {
    std::vector<std::vector<double>> next(dp.size(), std::vector<double>(static_cast<std::size_t>(d + 1), 0.0));
    for (int s = 0; s <= max_sum; ++s)
      for (int e = 0; e <= k; ++e) {
        const double w = dp[static_cast<std::size_t>(s)][static_cast<std::size_t>(e)];
        if (w == 0.0) continue;
        for (int v = floor; s + v <= max_sum; ++v) {
          const int e2 = e + (v > floor ? 1 : 0);
          next[static_cast<std::size_t>(s + v)][static_cast<std::size_t>(e2)] += w * (std::ldexp(1.0, v) + 1.0);
        }
      }
    dp = std::move(next);
  }
  double total = 0.0;
  for (int s = lo; s <= hi; ++s)
    for (int e = 0; e <= d; ++e)
      if (s - e <= cap) total += dp[static_cast<std::size_t>(s)][static_cast<std::size_t>(e)];
  return total;
}

}  // namespace detail

/// Upper bound on the unique nodes `method_plan(method, d, n, shift)` will
/// solve, computed without building the plan.
inline double projected_unique_nodes(Method method, int d, int n, int level_shift) {
  auto full = [d](int level) { return std::pow(std::ldexp(1.0, level) + 1.0, d); };
  const int lo = n + level_shift * d;
  switch (method) {
    case Method::FG: return full(n);
    case Method::HOFG: return full(n) + full(n + 1);
    case Method::SPLIT2D: return full(n) + 2.0 * (std::ldexp(1.0, n + 1) + 1.0) * (std::ldexp(1.0, n) + 1.0);
    case Method::SG: return detail::count_nodes(d, level_shift, lo, lo + d - 1, lo + d - 1 + d);
    case Method::HOSG: return detail::count_nodes(d, level_shift, lo, lo + 2 * d - 1, lo + d - 1);
  }
  return 0.0;
}

/// (4 u_{n+1}(x) - u_n(x)) / 3 on isotropic full grids.
inline double richardson_full(const ProblemSpec& p, int n, const Point& x, const EvaluateOptions& options = {}) {
  return evaluate_plan(p, richardson_plan(p.dim, n), x, options).value;
}

inline double splitting_extrapolation_2d(const ProblemSpec& p, const LevelIndex& l, const Point& x,
                                         const EvaluateOptions& options = {}) {
  if (p.dim != 2 || l.dim() != 2) throw std::invalid_argument("splitting extrapolation is defined for d = 2 only");
  return evaluate_plan(p, splitting_plan(l), x, options).value;
}

struct ConvergenceRecord {
  std::string method;
  int d = 0;
  int n = 0;
  std::uint64_t dof_unique = 0;
  std::uint64_t dof_total = 0;
  double value = 0.0;
  std::optional<double> surplus;
  double runtime_s = 0.0;
};

struct StudyConfig {
  Method method = Method::HOSG;
  int dim = 2;
  int n_min = 1;
  int n_max = 6;
  std::optional<Point> eval_point;  // empty: x*
  int level_shift = 1;
  std::uint64_t node_budget = 50'000'000;
  unsigned parallelism = 0;
  /// Extra random points for the surplus (max over x* and these). 0 keeps
  /// the single-point surplus.
  int surplus_points = 0;
  std::uint64_t seed = 20240917;
};

struct StudyResult {
  std::vector<ConvergenceRecord> records;
  Point eval_point;
  bool budget_exceeded = false;
  std::string message;
};

inline void validate(const StudyConfig& cfg) {
  if (cfg.dim < 1) throw std::invalid_argument("dimension must be >= 1");
  if (cfg.n_min > cfg.n_max) throw std::invalid_argument("n_min must be <= n_max");
  if (cfg.n_min < 0) throw std::invalid_argument("n_min must be >= 0");
  if (cfg.level_shift != 0 && cfg.level_shift != 1) throw std::invalid_argument("level shift must be 0 or 1");
  if (cfg.node_budget == 0) throw std::invalid_argument("node budget must be > 0");
  if (cfg.surplus_points < 0) throw std::invalid_argument("surplus point count must be >= 0");
  if (cfg.method == Method::SPLIT2D && cfg.dim != 2) throw std::invalid_argument("SPLIT2D requires d = 2");
  const bool full = cfg.method == Method::FG || cfg.method == Method::HOFG || cfg.method == Method::SPLIT2D;
  if (full && cfg.n_min < 1) throw std::invalid_argument(to_string(cfg.method) + " requires n >= 1");
  if (cfg.eval_point) {
    if (cfg.eval_point->dim() != cfg.dim) throw std::invalid_argument("evaluation point has wrong dimension");
    if (!cfg.eval_point->in_unit_cube()) throw std::invalid_argument("evaluation point outside [0,1]^d");
  }
}

/// Runs the study for n = n_min..n_max. Before each level the projected node
/// count is checked against the budget; on overflow the study stops and the
/// records gathered so far are returned with `budget_exceeded` set.
/// `on_record` is called for every record once its surplus is final.
inline StudyResult hierarchical_surplus_study(const ProblemSpec& p, const StudyConfig& cfg,
                                              const std::function<void(const ConvergenceRecord&)>& on_record = {}) {
  validate(cfg);
  if (p.dim != cfg.dim) throw std::invalid_argument("problem dimension differs from study dimension");

  StudyResult result;
  result.eval_point = cfg.eval_point.value_or(default_eval_point(cfg.dim));
  std::vector<Point> points{result.eval_point};
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int k = 0; k < cfg.surplus_points; ++k) {
    Point x;
    for (int j = 0; j < cfg.dim; ++j) x.coords.push_back(unit(rng));
    points.push_back(std::move(x));
  }

  GridCache cache;
  EvaluateOptions options;
  options.parallelism = cfg.parallelism;
  options.cache = &cache;
  options.degenerate_as_zero = cfg.level_shift == 0;

  std::vector<double> previous;
  auto emit = [&](std::size_t index) {
    if (on_record) on_record(result.records[index]);
  };

  for (int n = cfg.n_min; n <= cfg.n_max; ++n) {
    const double projected = projected_unique_nodes(cfg.method, cfg.dim, n, cfg.level_shift);
    if (projected > static_cast<double>(cfg.node_budget)) {
      result.budget_exceeded = true;
      result.message = BudgetExceeded(static_cast<std::uint64_t>(std::min(projected, 1.8e19)), cfg.node_budget).what();
      break;
    }
    const CombinationPlan plan = method_plan(cfg.method, cfg.dim, n, cfg.level_shift);
    std::set<LevelIndex> keep;
    for (const auto& [l, c] : plan.terms()) keep.insert(l);
    cache.retain(keep);

    const EvaluationResult eval = evaluate_plan(p, plan, points, options);

    if (!result.records.empty()) {
      double surplus = 0.0;
      for (std::size_t k = 0; k < points.size(); ++k) surplus = std::max(surplus, std::abs(eval.values[k] - previous[k]));
      result.records.back().surplus = surplus;
      emit(result.records.size() - 1);
    }
    ConvergenceRecord record;
    record.method = to_string(cfg.method);
    record.d = cfg.dim;
    record.n = n;
    record.dof_unique = eval.dof_unique;
    record.dof_total = eval.dof_total;
    record.value = eval.value;
    record.runtime_s = eval.seconds;
    result.records.push_back(record);
    previous = eval.values;
  }
  if (!result.records.empty()) emit(result.records.size() - 1);
  return result;
}

/// Surpluses and matching levels of the records that have one.
struct SurplusSeries {
  std::vector<double> levels;
  std::vector<double> surpluses;
};

inline SurplusSeries surplus_series(const std::vector<ConvergenceRecord>& records, int n_from, int n_to) {
  SurplusSeries s;
  for (const auto& r : records)
    if (r.surplus && r.n >= n_from && r.n <= n_to) {
      s.levels.push_back(r.n);
      s.surpluses.push_back(*r.surplus);
    }
  return s;
}

// Output. CSV columns are fixed; floats use 17 significant digits.

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline constexpr const char* kCsvHeader = "method,d,n,dof_unique,dof_total,value,surplus,runtime_s";

inline std::string to_csv_row(const ConvergenceRecord& r) {
  std::string row = r.method + "," + std::to_string(r.d) + "," + std::to_string(r.n) + "," +
                    std::to_string(r.dof_unique) + "," + std::to_string(r.dof_total) + "," + format_double(r.value) +
                    ",";
  if (r.surplus) row += format_double(*r.surplus);
  row += "," + format_double(r.runtime_s);
  return row;
}

inline void write_csv(std::ostream& os, const std::vector<ConvergenceRecord>& records) {
  os << kCsvHeader << '\n';
  for (const auto& r : records) os << to_csv_row(r) << '\n';
}

inline nlohmann::json to_json(const ConvergenceRecord& r) {
  nlohmann::json j{{"method", r.method},       {"d", r.d},          {"n", r.n},
                   {"dof_unique", r.dof_unique}, {"dof_total", r.dof_total}, {"value", r.value},
                   {"surplus", nullptr},        {"runtime_s", r.runtime_s}};
  if (r.surplus) j["surplus"] = *r.surplus;
  return j;
}

inline nlohmann::json study_to_json(const StudyConfig& cfg, const StudyResult& result) {
  nlohmann::json records = nlohmann::json::array();
  for (const auto& r : result.records) records.push_back(to_json(r));
  return {{"meta",
           {{"method", to_string(cfg.method)},
            {"d", cfg.dim},
            {"n_min", cfg.n_min},
            {"n_max", cfg.n_max},
            {"eval_point", result.eval_point.coords},
            {"level_shift", cfg.level_shift},
            {"node_budget", cfg.node_budget},
            {"surplus_points", cfg.surplus_points},
            {"seed", cfg.seed},
            {"budget_exceeded", result.budget_exceeded}}},
          {"records", std::move(records)}};
}

}  // namespace sparsecombine
