#pragma once

// Plan evaluation: solve every grid of a plan (concurrently, through an
// optional shared cache), interpolate at the requested points and reduce
// with the plan's coefficients in level order.

#include "sparsecombine/errors.hpp"
#include "sparsecombine/grid.hpp"
#include "sparsecombine/pde.hpp"
#include "sparsecombine/plan.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <span>
#include <thread>
#include <utility>
#include <vector>

namespace sparsecombine {

/// Solved grids keyed by (problem name, level). Concurrent insert-or-get:
/// each key is solved at most once, later callers wait on the first.
class GridCache {
 public:
  using GridPtr = std::shared_ptr<const GridFunction>;
  using Producer = std::function<GridFunction()>;

  /// Returns the cached grid or runs `produce`. `produced` reports whether
  /// this call did the work.
  GridPtr get_or_produce(const std::string& problem, const LevelIndex& level, const Producer& produce,
                         bool* produced = nullptr) {
    std::promise<GridPtr> promise;
    std::shared_future<GridPtr> future;
    bool owner = false;
    {
      std::lock_guard lock(mutex_);
      auto [it, inserted] = entries_.try_emplace(Key{problem, level});
      if (inserted) {
        it->second = promise.get_future().share();
        owner = true;
      }
      future = it->second;
    }
    if (produced) *produced = owner;
    if (owner) {
      try {
        promise.set_value(std::make_shared<const GridFunction>(produce()));
      } catch (...) {
        promise.set_exception(std::current_exception());
        std::lock_guard lock(mutex_);
        entries_.erase(Key{problem, level});
      }
    }
    return future.get();
  }

  bool contains(const std::string& problem, const LevelIndex& level) const {
    std::lock_guard lock(mutex_);
    return entries_.count(Key{problem, level}) != 0;
  }

  std::size_t size() const {
    std::lock_guard lock(mutex_);
    return entries_.size();
  }

  /// Drops every entry whose level is not in `keep`.
  void retain(const std::set<LevelIndex>& keep) {
    std::lock_guard lock(mutex_);
    std::erase_if(entries_, [&](const auto& entry) { return keep.count(entry.first.second) == 0; });
  }

  void clear() {
    std::lock_guard lock(mutex_);
    entries_.clear();
  }

 private:
  using Key = std::pair<std::string, LevelIndex>;
  mutable std::mutex mutex_;
  std::map<Key, std::shared_future<GridPtr>> entries_;
};

enum class GridSource {
  Solve,        // finite-difference solve
  ExactSample,  // sample the exact solution at the nodes (interpolation only)
};

struct EvaluateOptions {
  /// Worker threads; 0 selects std::thread::hardware_concurrency().
  unsigned parallelism = 0;
  GridCache* cache = nullptr;
  GridSource source = GridSource::Solve;
  SolveOptions solve;
  /// Grids with some l_j = 0 have no interior unknowns; with homogeneous
  /// Dirichlet data their solution is identically zero. Off by default:
  /// such grids are rejected.
  bool degenerate_as_zero = false;
};

struct EvaluationResult {
  double value = 0.0;           // at the first point
  std::vector<double> values;   // one per point
  std::uint64_t dof_total = 0;
  std::uint64_t dof_unique = 0;
  int grids_solved = 0;
  double seconds = 0.0;
};

inline unsigned resolve_parallelism(unsigned requested) {
  if (requested != 0) return requested;
  return std::max(1U, std::thread::hardware_concurrency());
}

inline GridFunction produce_grid(const ProblemSpec& p, const LevelIndex& l, const EvaluateOptions& options) {
  if (options.source == GridSource::Solve && options.degenerate_as_zero && l.min() == 0)
    return GridFunction(l, std::vector<double>(l.node_count(), 0.0));
  if (options.source == GridSource::ExactSample) {
    if (!p.exact) throw std::invalid_argument("problem '" + p.name + "' has no exact solution to sample");
    return GridFunction::sample(l, *p.exact);
  }
  return solve_poisson(p, l, options.solve).grid;
}

inline EvaluationResult evaluate_plan(const ProblemSpec& p, const CombinationPlan& plan, std::span<const Point> points,
                                      const EvaluateOptions& options = {}) {
  if (points.empty()) throw std::invalid_argument("evaluate_plan: no evaluation points");
  if (plan.dim() != p.dim) throw std::invalid_argument("evaluate_plan: plan and problem dimensions differ");
  for (const Point& x : points) {
    if (x.dim() != p.dim) throw std::invalid_argument("evaluate_plan: point dimension mismatch");
    if (!x.in_unit_cube()) throw std::domain_error("evaluate_plan: point outside [0,1]^d");
  }
  if (options.source == GridSource::Solve && !options.degenerate_as_zero)
    for (const auto& [l, c] : plan.terms())
      if (l.min() < 1) throw DegenerateGridError(l.to_string());

  const auto start = std::chrono::steady_clock::now();
  const std::vector<LevelIndex> levels = [&] {
    std::vector<LevelIndex> out;
    for (const auto& [l, c] : plan.terms()) out.push_back(l);
    return out;
  }();
  const std::string key = options.source == GridSource::Solve ? p.name : p.name + "#exact";

  // per_level[i][k]: interpolant of grid i at point k
  std::vector<std::vector<double>> per_level(levels.size());
  std::atomic<std::size_t> next{0};
  std::atomic<int> solved{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::string error_level;
  std::mutex error_mutex;

  auto worker = [&] {
    while (!failed.load()) {
      const std::size_t i = next.fetch_add(1);
      if (i >= levels.size()) return;
      const LevelIndex& l = levels[i];
      try {
        auto interpolate = [&](const GridFunction& g) {
          std::vector<double> v(points.size());
          for (std::size_t k = 0; k < points.size(); ++k) v[k] = multilinear_eval(g, points[k]);
          return v;
        };
        if (options.cache) {
          bool produced = false;
          auto grid = options.cache->get_or_produce(key, l, [&] { return produce_grid(p, l, options); }, &produced);
          if (produced) ++solved;
          per_level[i] = interpolate(*grid);
        } else {
          per_level[i] = interpolate(produce_grid(p, l, options));
          ++solved;
        }
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) {
          error = std::current_exception();
          error_level = l.to_string();
        }
        failed = true;
      }
    }
  };

  const unsigned threads = std::min<unsigned>(resolve_parallelism(options.parallelism),
                                               static_cast<unsigned>(std::max<std::size_t>(1, levels.size())));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  if (error) {
    try {
      std::rethrow_exception(error);
    } catch (const std::exception& e) {
      throw GridSolveError(error_level, e.what());
    }
  }

  EvaluationResult result;
  result.values.assign(points.size(), 0.0);
  std::size_t i = 0;
  for (const auto& [l, c] : plan.terms()) {
    const double weight = c.to_double();
    for (std::size_t k = 0; k < points.size(); ++k) result.values[k] += weight * per_level[i][k];
    ++i;
  }
  result.value = result.values.front();
  const PlanDof dof = plan_dof(plan);
  result.dof_total = dof.dof_total;
  result.dof_unique = dof.dof_unique;
  result.grids_solved = solved.load();
  result.seconds = detail::seconds_since(start);
  return result;
}

inline EvaluationResult evaluate_plan(const ProblemSpec& p, const CombinationPlan& plan, const Point& x,
                                      const EvaluateOptions& options = {}) {
  return evaluate_plan(p, plan, std::span<const Point>(&x, 1), options);
}

inline EvaluationResult evaluate_plan(const ProblemSpec& p, const CombinationPlan& plan, const Point& x,
                                      GridCache& cache, unsigned parallelism = 0) {
  EvaluateOptions options;
  options.cache = &cache;
  options.parallelism = parallelism;
  return evaluate_plan(p, plan, x, options);
}

}  // namespace sparsecombine
