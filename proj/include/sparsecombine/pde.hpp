#pragma once

// Second-order central finite differences for
//
//   sum_k d^2u/dx_k^2 = f  on (0,1)^d,   u = 0 on the boundary,
//
// on anisotropic tensor grids. The interior operator is a Kronecker sum of 1D
// second-difference matrices, so the primary solver diagonalizes it with a
// sine transform per direction. A matrix-free CG solver is kept as a fallback.

#include "sparsecombine/errors.hpp"
#include "sparsecombine/grid.hpp"
#include "sparsecombine/sine_transform.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

namespace sparsecombine {

using ScalarField = std::function<double(const Point&)>;

struct ProblemSpec {
  int dim = 1;
  ScalarField rhs;
  std::optional<ScalarField> exact;
  std::string name;
};

struct SolverReport {
  LevelIndex level;
  double residual_inf = 0.0;  // max |A_h u_h - f_h| over interior nodes
  double solve_seconds = 0.0;
  int iterations = 0;  // 0 for the direct path
};

struct PoissonSolution {
  GridFunction grid;
  SolverReport report;
};

enum class PoissonSolver { FastDiagonalization, ConjugateGradient };

struct SolveOptions {
  PoissonSolver solver = PoissonSolver::FastDiagonalization;
  SineBackend sine_backend = SineBackend::Auto;
  double cg_relative_tolerance = 1e-12;
  /// 0 selects 10 * (number of unknowns).
  std::size_t cg_max_iterations = 0;
};

/// f(x) = d pi^2 prod sin(pi x_i) with exact solution u(x) = -prod sin(pi x_i).
inline ProblemSpec builtin_sine_problem(int d) {
  if (d < 1) throw std::invalid_argument("builtin_sine_problem: d must be >= 1");
  auto product = [](const Point& x) {
    double p = 1.0;
    for (double xi : x.coords) p *= std::sin(std::numbers::pi * xi);
    return p;
  };
  ProblemSpec p;
  p.dim = d;
  p.name = "sine";
  p.rhs = [d, product](const Point& x) { return d * std::numbers::pi * std::numbers::pi * product(x); };
  p.exact = [product](const Point& x) { return -product(x); };
  return p;
}

namespace detail {

inline void require_interior(const LevelIndex& l) {
  if (l.min() < 1) throw DegenerateGridError(l.to_string());
}

/// Interior extents 2^{l_j} - 1.
inline std::vector<std::size_t> interior_extents(const LevelIndex& l) {
  std::vector<std::size_t> m(static_cast<std::size_t>(l.dim()));
  for (int j = 0; j < l.dim(); ++j) m[static_cast<std::size_t>(j)] = static_cast<std::size_t>(l.points(j) - 2);
  return m;
}

/// Calls fn(full_offset, interior_offset) for every interior node, in
/// lexicographic order.
template <class Fn>
void for_each_interior(const LevelIndex& l, Fn&& fn) {
  const int d = l.dim();
  const auto strides = node_strides(l);
  const auto extents = interior_extents(l);
  std::vector<std::size_t> idx(static_cast<std::size_t>(d), 1);
  std::size_t full = 0;
  for (int j = 0; j < d; ++j) full += strides[static_cast<std::size_t>(j)];
  const std::size_t count = l.interior_count();
  for (std::size_t interior = 0; interior < count; ++interior) {
    fn(full, interior);
    for (int j = d - 1; j >= 0; --j) {
      const auto uj = static_cast<std::size_t>(j);
      if (++idx[uj] <= extents[uj]) {
        full += strides[uj];
        break;
      }
      full -= (extents[uj] - 1) * strides[uj];
      idx[uj] = 1;
    }
  }
}

/// Applies the 1D transform along direction `dir` of a row-major interior
/// array with the given extents.
inline void transform_direction(std::vector<double>& data, const std::vector<std::size_t>& extents, std::size_t dir,
                                SineTransform& transform, std::vector<double>& line) {
  std::size_t outer = 1, inner = 1;
  for (std::size_t k = 0; k < dir; ++k) outer *= extents[k];
  for (std::size_t k = dir + 1; k < extents.size(); ++k) inner *= extents[k];
  const std::size_t m = extents[dir];
  line.resize(m);
  for (std::size_t o = 0; o < outer; ++o) {
    const std::size_t block = o * m * inner;
    for (std::size_t i = 0; i < inner; ++i) {
      for (std::size_t t = 0; t < m; ++t) line[t] = data[block + t * inner + i];
      transform(line);
      for (std::size_t t = 0; t < m; ++t) data[block + t * inner + i] = line[t];
    }
  }
}

inline double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace detail

/// 2d+1-point Laplacian on interior nodes; boundary entries of the result are 0.
inline GridFunction apply_operator(const GridFunction& g) {
  const LevelIndex& l = g.level();
  detail::require_interior(l);
  const auto strides = node_strides(l);
  const auto h = l.mesh_widths();
  std::vector<double> inv_h2(h.size());
  for (std::size_t j = 0; j < h.size(); ++j) inv_h2[j] = 1.0 / (h[j] * h[j]);
  const auto values = g.values();
  std::vector<double> out(values.size(), 0.0);
  detail::for_each_interior(l, [&](std::size_t i, std::size_t) {
    double acc = 0.0;
    for (std::size_t j = 0; j < strides.size(); ++j)
      acc += (values[i + strides[j]] - 2.0 * values[i] + values[i - strides[j]]) * inv_h2[j];
    out[i] = acc;
  });
  return GridFunction(l, std::move(out));
}

/// Tolerance on the computed residual: the requested 1e-10 (1 + max|f|)
/// plus the floor set by evaluating A_h u_h in double precision.
inline double residual_tolerance(const LevelIndex& l, double max_abs_rhs, double max_abs_solution) {
  double norm_a = 0.0;
  for (double h : l.mesh_widths()) norm_a += 4.0 / (h * h);
  return 1e-10 * (1.0 + max_abs_rhs) + 16.0 * std::numeric_limits<double>::epsilon() * norm_a * max_abs_solution;
}

namespace detail {

inline std::vector<double> sample_rhs_interior(const ProblemSpec& p, const LevelIndex& l) {
  std::vector<double> f(l.interior_count());
  const auto extents = interior_extents(l);
  Point x{std::vector<double>(static_cast<std::size_t>(l.dim()))};
  std::vector<std::size_t> idx(static_cast<std::size_t>(l.dim()), 1);
  for (int j = 0; j < l.dim(); ++j) x.coords[static_cast<std::size_t>(j)] = std::ldexp(1.0, -l[j]);
  for (std::size_t n = 0; n < f.size(); ++n) {
    f[n] = p.rhs(x);
    for (int j = l.dim() - 1; j >= 0; --j) {
      const auto uj = static_cast<std::size_t>(j);
      if (++idx[uj] <= extents[uj]) {
        x.coords[uj] = std::ldexp(static_cast<double>(idx[uj]), -l[j]);
        break;
      }
      idx[uj] = 1;
      x.coords[uj] = std::ldexp(1.0, -l[j]);
    }
  }
  return f;
}

inline std::vector<double> embed_interior(const LevelIndex& l, const std::vector<double>& interior) {
  std::vector<double> full(l.node_count(), 0.0);
  for_each_interior(l, [&](std::size_t i, std::size_t k) { full[i] = interior[k]; });
  return full;
}

inline std::vector<double> solve_fast(const LevelIndex& l, std::vector<double> u, SineBackend backend) {
  const auto extents = interior_extents(l);
  const int d = l.dim();
  std::vector<double> line;

  for (int j = 0; j < d; ++j) {
    SineTransform transform(extents[static_cast<std::size_t>(j)], backend);
    transform_direction(u, extents, static_cast<std::size_t>(j), transform, line);
  }

  // Eigenvalues of the 1D second difference: -4 sin^2(k pi h / 2) / h^2.
  std::vector<std::vector<double>> eig(static_cast<std::size_t>(d));
  for (int j = 0; j < d; ++j) {
    const double h = std::ldexp(1.0, -l[j]);
    auto& ej = eig[static_cast<std::size_t>(j)];
    ej.resize(extents[static_cast<std::size_t>(j)]);
    for (std::size_t k = 0; k < ej.size(); ++k) {
      const double s = std::sin(static_cast<double>(k + 1) * std::numbers::pi * h / 2.0);
      ej[k] = -4.0 * s * s / (h * h);
    }
  }

  double scale = 1.0;
  for (int j = 0; j < d; ++j) scale *= 2.0 / static_cast<double>(extents[static_cast<std::size_t>(j)] + 1);

  std::vector<std::size_t> idx(static_cast<std::size_t>(d), 0);
  for (double& value : u) {
    double lambda = 0.0;
    for (int j = 0; j < d; ++j) lambda += eig[static_cast<std::size_t>(j)][idx[static_cast<std::size_t>(j)]];
    value *= scale / lambda;
    for (int j = d - 1; j >= 0; --j) {
      const auto uj = static_cast<std::size_t>(j);
      if (++idx[uj] < extents[uj]) break;
      idx[uj] = 0;
    }
  }

  for (int j = 0; j < d; ++j) {
    SineTransform transform(extents[static_cast<std::size_t>(j)], backend);
    transform_direction(u, extents, static_cast<std::size_t>(j), transform, line);
  }
  return u;
}

/// Interior-only Laplacian with zero Dirichlet data.
inline void apply_interior(const std::vector<std::size_t>& extents, const std::vector<double>& inv_h2,
                           const std::vector<double>& u, std::vector<double>& out) {
  const std::size_t d = extents.size();
  std::vector<std::size_t> strides(d);
  std::size_t s = 1;
  for (std::size_t j = d; j-- > 0;) {
    strides[j] = s;
    s *= extents[j];
  }
  std::vector<std::size_t> idx(d, 0);
  for (std::size_t n = 0; n < u.size(); ++n) {
    double acc = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double left = idx[j] > 0 ? u[n - strides[j]] : 0.0;
      const double right = idx[j] + 1 < extents[j] ? u[n + strides[j]] : 0.0;
      acc += (left - 2.0 * u[n] + right) * inv_h2[j];
    }
    out[n] = acc;
    for (std::size_t j = d; j-- > 0;) {
      if (++idx[j] < extents[j]) break;
      idx[j] = 0;
    }
  }
}

/// CG on the SPD system (-A) u = -f.
inline std::vector<double> solve_cg(const LevelIndex& l, const std::vector<double>& f, double rel_tol,
                                    std::size_t max_iter, int& iterations) {
  const auto extents = interior_extents(l);
  const auto h = l.mesh_widths();
  std::vector<double> inv_h2(h.size());
  for (std::size_t j = 0; j < h.size(); ++j) inv_h2[j] = 1.0 / (h[j] * h[j]);

  const std::size_t n = f.size();
  if (max_iter == 0) max_iter = 10 * n;
  auto dot = [](const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
  };

  std::vector<double> u(n, 0.0), r(n), p(n), q(n);
  for (std::size_t i = 0; i < n; ++i) r[i] = -f[i];
  p = r;
  const double b_norm = std::sqrt(dot(r, r));
  iterations = 0;
  if (b_norm == 0.0) return u;
  double rr = dot(r, r);
  while (std::sqrt(rr) > rel_tol * b_norm) {
    if (static_cast<std::size_t>(iterations) >= max_iter)
      throw SolverError("CG did not converge on " + l.to_string() + " after " + std::to_string(iterations) +
                            " iterations",
                        std::sqrt(rr) / b_norm);
    apply_interior(extents, inv_h2, p, q);
    for (double& v : q) v = -v;
    const double alpha = rr / dot(p, q);
    for (std::size_t i = 0; i < n; ++i) {
      u[i] += alpha * p[i];
      r[i] -= alpha * q[i];
    }
    const double rr_next = dot(r, r);
    const double beta = rr_next / rr;
    rr = rr_next;
    for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
    ++iterations;
  }
  return u;
}

}  // namespace detail

/// Solves the discrete Poisson problem on grid level `l`.
inline PoissonSolution solve_poisson(const ProblemSpec& p, const LevelIndex& l, const SolveOptions& options = {}) {
  if (p.dim != l.dim())
    throw std::invalid_argument("solve_poisson: problem dimension " + std::to_string(p.dim) + " vs level " +
                                l.to_string());
  detail::require_interior(l);
  const auto start = std::chrono::steady_clock::now();

  std::vector<double> f = detail::sample_rhs_interior(p, l);
  if (!std::all_of(f.begin(), f.end(), [](double v) { return std::isfinite(v); }))
    throw SolverError("solve_poisson: right-hand side is not finite on " + l.to_string(),
                      std::numeric_limits<double>::quiet_NaN());
  int iterations = 0;
  std::vector<double> u = options.solver == PoissonSolver::ConjugateGradient
                              ? detail::solve_cg(l, f, options.cg_relative_tolerance, options.cg_max_iterations,
                                                 iterations)
                              : detail::solve_fast(l, f, options.sine_backend);

  GridFunction grid(l, detail::embed_interior(l, u));
  const double seconds = detail::seconds_since(start);

  const GridFunction applied = apply_operator(grid);
  double residual = 0.0, max_f = 0.0, max_u = 0.0;
  detail::for_each_interior(l, [&](std::size_t i, std::size_t k) {
    residual = std::max(residual, std::abs(applied[i] - f[k]));
    max_f = std::max(max_f, std::abs(f[k]));
    max_u = std::max(max_u, std::abs(grid[i]));
  });
  if (!(residual <= residual_tolerance(l, max_f, max_u)))
    throw SolverError("solve_poisson: residual " + std::to_string(residual) + " above tolerance on " + l.to_string(),
                      residual);

  return PoissonSolution{std::move(grid), SolverReport{l, residual, seconds, iterations}};
}

}  // namespace sparsecombine
