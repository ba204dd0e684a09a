#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace sparsecombine {

/// A grid with some l_j = 0 has no interior unknowns in that direction.
class DegenerateGridError : public std::invalid_argument {
 public:
  explicit DegenerateGridError(const std::string& level)
      : std::invalid_argument("degenerate grid " + level + ": every level must be >= 1") {}
};

/// Iterative solver failed to reach its tolerance.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double residual) : std::runtime_error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

/// Solving one grid of a combination failed; carries the level.
class GridSolveError : public std::runtime_error {
 public:
  GridSolveError(const std::string& level, const std::string& cause)
      : std::runtime_error("solve failed on level " + level + ": " + cause), level_(level) {}
  const std::string& level() const { return level_; }

 private:
  std::string level_;
};

/// Projected unique node count exceeds the configured cap.
class BudgetExceeded : public std::runtime_error {
 public:
  BudgetExceeded(std::uint64_t projected, std::uint64_t budget)
      : std::runtime_error("node budget exceeded: projected " + std::to_string(projected) + " unique nodes, budget " +
                           std::to_string(budget)),
        projected_(projected),
        budget_(budget) {}
  std::uint64_t projected() const { return projected_; }
  std::uint64_t budget() const { return budget_; }

 private:
  std::uint64_t projected_;
  std::uint64_t budget_;
};

}  // namespace sparsecombine
