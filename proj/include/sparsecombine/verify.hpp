#pragma once

// Checks for the extrapolation weights alpha_k = (-4)^k / (-3)^d:
//
//   normalization        sum_k alpha_k C(d,k) = 1
//   cancellation system  sum_k alpha_k sum_l 4^{-l} C(m,l) C(d-m,k-l) = 0, m = 1..d
//   lemma_cancel         sum_{i in {0,1}^d} alpha_{|i|} 4^{-i_1} beta(i_2..i_d) = 0
//
// all in exact rational arithmetic, plus a floating-point model of an error
// expansion with h_j^2 and h_j^4 terms on which the extrapolation must leave
// only the quartic part.

#include "sparsecombine/convergence.hpp"
#include "sparsecombine/grid.hpp"
#include "sparsecombine/plan.hpp"
#include "sparsecombine/rational.hpp"

#include <bit>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace sparsecombine {

enum class Identity { Normalization, CancellationSystem, LemmaCancel };

inline std::string to_string(Identity id) {
  switch (id) {
    case Identity::Normalization: return "normalization";
    case Identity::CancellationSystem: return "cancellation_system";
    case Identity::LemmaCancel: return "lemma_cancel";
  }
  return "?";
}

struct IdentityReport {
  int d = 0;
  Identity identity = Identity::Normalization;
  Rational exact_defect{0};  // max |defect| in rational arithmetic
  std::optional<double> float_defect;
  double float_tolerance = 0.0;
  bool pass = false;
  std::optional<std::uint64_t> seed;
};

/// Weights to check; defaults to extrapolation_weights(d). Tests pass
/// perturbed weights here.
using WeightOverride = std::optional<std::vector<Rational>>;

inline std::vector<Rational> weights_or_default(int d, const WeightOverride& weights) {
  if (!weights) return extrapolation_weights(d);
  if (weights->size() != static_cast<std::size_t>(d) + 1)
    throw std::invalid_argument("weight override must have d + 1 entries");
  return *weights;
}

inline IdentityReport check_normalization(int d, const WeightOverride& weights = std::nullopt) {
  if (d < 1 || d > 64) throw std::invalid_argument("check_normalization: need 1 <= d <= 64");
  const auto alpha = weights_or_default(d, weights);
  Rational sum{0};
  for (int k = 0; k <= d; ++k) sum += alpha[static_cast<std::size_t>(k)] * Rational(binomial(d, k), 1);
  IdentityReport r;
  r.d = d;
  r.identity = Identity::Normalization;
  r.exact_defect = abs(sum - Rational{1});
  r.pass = r.exact_defect.is_zero();
  return r;
}

inline IdentityReport check_cancellation_system(int d, const WeightOverride& weights = std::nullopt) {
  if (d < 1 || d > 32) throw std::invalid_argument("check_cancellation_system: need 1 <= d <= 32");
  const auto alpha = weights_or_default(d, weights);
  Rational worst{0};
  for (int m = 1; m <= d; ++m) {
    Rational total{0};
    for (int k = 0; k <= d; ++k) {
      Rational inner{0};
      for (int l = std::max(0, m + k - d); l <= std::min(m, k); ++l)
        inner += Rational(binomial(m, l) * binomial(d - m, k - l), 1) /
                 Rational(Rational::Integer(1) << (2 * l), 1);
      total += alpha[static_cast<std::size_t>(k)] * inner;
    }
    if (abs(total) > worst) worst = abs(total);
  }
  IdentityReport r;
  r.d = d;
  r.identity = Identity::CancellationSystem;
  r.exact_defect = worst;
  r.pass = worst.is_zero();
  return r;
}

namespace detail {

/// sum over i in {0,1}^d of alpha_{|i|} 4^{-i_1} beta(i_2, ..., i_d); bit 0
/// of the mask is i_1, the remaining bits index beta.
template <class T, class Weight>
T lemma_sum(int d, const std::vector<Weight>& alpha, const std::vector<T>& beta) {
  T total{0};
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << d); ++mask) {
    T term = T(alpha[static_cast<std::size_t>(std::popcount(mask))]) * beta[mask >> 1];
    if (mask & 1U) term = term / T(4);
    total += term;
  }
  return total;
}

}  // namespace detail

/// Random beta tables on {0,1}^{d-1}: rational entries p/q with |p| <= 1000,
/// 1 <= q <= 1000, and floating entries uniform in [-1, 1].
inline IdentityReport check_lemma_cancel(int d, int trials, std::uint64_t seed,
                                         const WeightOverride& weights = std::nullopt) {
  if (d < 1 || d > 24) throw std::invalid_argument("check_lemma_cancel: need 1 <= d <= 24");
  if (trials < 1) throw std::invalid_argument("check_lemma_cancel: trials must be >= 1");
  const auto alpha = weights_or_default(d, weights);
  std::vector<double> alpha_f;
  for (const auto& a : alpha) alpha_f.push_back(a.to_double());

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> numerator(-1000, 1000), denominator(1, 1000);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const std::size_t table = std::size_t{1} << (d - 1);

  Rational worst{0};
  double worst_f = 0.0;
  for (int t = 0; t < trials; ++t) {
    std::vector<Rational> beta(table);
    for (auto& b : beta) {
      const int num = numerator(rng);
      b = Rational(num, denominator(rng));
    }
    const Rational s = detail::lemma_sum(d, alpha, beta);
    if (abs(s) > worst) worst = abs(s);

    std::vector<double> beta_f(table);
    for (auto& b : beta_f) b = unit(rng);
    worst_f = std::max(worst_f, std::abs(detail::lemma_sum(d, alpha_f, beta_f)));
  }
  IdentityReport r;
  r.d = d;
  r.identity = Identity::LemmaCancel;
  r.exact_defect = worst;
  r.float_defect = worst_f;
  r.float_tolerance = 1e-12 * std::ldexp(1.0, d);
  r.seed = seed;
  r.pass = worst.is_zero() && worst_f <= r.float_tolerance;
  return r;
}

/// Model of a discretization error expansion,
///
///   U(x; h) = u(x) - sum_j beta_j(x; h_{!=j}) h_j^2 - sum_S gamma_S(x; h_S) prod_{j in S} h_j^4.
///
/// beta_j receives the d-1 mesh widths other than h_j; gamma_S receives the
/// widths of S in increasing direction order. `gamma_bound` must bound every
/// |gamma_S| over all arguments.
struct SyntheticExpansion {
  int dim = 1;
  std::function<double(const Point&)> base;
  std::vector<std::function<double(const Point&, std::span<const double>)>> beta;
  std::map<std::uint64_t, std::function<double(const Point&, std::span<const double>)>> gamma;  // keyed by mask
  double gamma_bound = 0.0;
};

inline double model_value(const SyntheticExpansion& se, const Point& x, std::span<const double> h) {
  const int d = se.dim;
  double value = se.base(x);
  std::vector<double> others(static_cast<std::size_t>(d > 0 ? d - 1 : 0));
  for (int j = 0; j < d && j < static_cast<int>(se.beta.size()); ++j) {
    if (!se.beta[static_cast<std::size_t>(j)]) continue;
    std::size_t o = 0;
    for (int k = 0; k < d; ++k)
      if (k != j) others[o++] = h[static_cast<std::size_t>(k)];
    const double hj = h[static_cast<std::size_t>(j)];
    value -= se.beta[static_cast<std::size_t>(j)](x, others) * hj * hj;
  }
  for (const auto& [mask, gamma] : se.gamma) {
    std::vector<double> hs;
    double product = 1.0;
    for (int j = 0; j < d; ++j)
      if (mask & (std::uint64_t{1} << j)) {
        const double hj = h[static_cast<std::size_t>(j)];
        hs.push_back(hj);
        product *= hj * hj * hj * hj;
      }
    value -= gamma(x, hs) * product;
  }
  return value;
}

/// 2^d-term extrapolation of the model around mesh widths h.
inline double extrapolate_model(const SyntheticExpansion& se, const Point& x, std::span<const double> h) {
  const int d = se.dim;
  const auto alpha = extrapolation_weights(d);
  double total = 0.0;
  std::vector<double> refined(h.begin(), h.end());
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << d); ++mask) {
    for (int j = 0; j < d; ++j)
      refined[static_cast<std::size_t>(j)] = (mask & (std::uint64_t{1} << j)) ? h[static_cast<std::size_t>(j)] / 2
                                                                               : h[static_cast<std::size_t>(j)];
    total += alpha[static_cast<std::size_t>(std::popcount(mask))].to_double() * model_value(se, x, refined);
  }
  return total;
}

struct SyntheticRow {
  int n = 0;
  double h = 0.0;
  double residual = 0.0;  // u(x) - extrapolated model
  double bound = 0.0;     // (5/3)^d * gamma_bound * sum_S prod h^4
};

struct SyntheticCheck {
  std::vector<SyntheticRow> rows;
  std::optional<double> slope;  // log2 |residual| vs n; empty if any residual is 0
  bool within_bound = true;
};

/// Runs the extrapolation at isotropic h = 2^{-n}, n = n_first..n_last.
inline SyntheticCheck synthetic_expansion_check(const SyntheticExpansion& se, const Point& x, int n_first, int n_last) {
  if (n_last - n_first + 1 < 3) throw std::invalid_argument("synthetic_expansion_check: need at least 3 levels");
  if (x.dim() != se.dim) throw std::invalid_argument("synthetic_expansion_check: point dimension mismatch");
  const int d = se.dim;
  SyntheticCheck check;
  bool any_zero = false;
  for (int n = n_first; n <= n_last; ++n) {
    const double h = std::ldexp(1.0, -n);
    const std::vector<double> hs(static_cast<std::size_t>(d), h);
    SyntheticRow row;
    row.n = n;
    row.h = h;
    row.residual = se.base(x) - extrapolate_model(se, x, hs);
    // sum over nonempty S of h^{4|S|} = (1 + h^4)^d - 1
    const double mixed = std::pow(1.0 + std::pow(h, 4), d) - 1.0;
    row.bound = std::pow(5.0 / 3.0, d) * se.gamma_bound * mixed;
    // rounding of the 2^d-term sum, so that gamma = 0 compares against ~0
    const double rounding = 8.0 * std::numeric_limits<double>::epsilon() * std::pow(5.0 / 3.0, d) *
                            std::max(1.0, std::abs(se.base(x)));
    if (std::abs(row.residual) > row.bound * (1.0 + 1e-10) + rounding) check.within_bound = false;
    if (row.residual == 0.0) any_zero = true;
    check.rows.push_back(row);
  }
  if (!any_zero) {
    std::vector<double> ns, rs;
    for (const auto& row : check.rows) {
      ns.push_back(row.n);
      rs.push_back(row.residual);
    }
    check.slope = log2_slope(ns, rs);
  }
  return check;
}

/// Random smooth instance: beta_j depends on x and on the other mesh widths,
/// gamma_S = c_S cos(w_S sum h_S + phi_S) with c_S in [0.5, 1].
inline SyntheticExpansion random_synthetic_expansion(int d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coef(-2.0, 2.0), amp(0.5, 1.0), freq(0.5, 3.0), phase(0.0, 1.0);
  SyntheticExpansion se;
  se.dim = d;
  const double a0 = coef(rng);
  se.base = [a0](const Point& x) {
    double s = a0;
    for (double xi : x.coords) s += std::sin(3.0 * xi);
    return s;
  };
  for (int j = 0; j < d; ++j) {
    const double a = coef(rng), b = coef(rng), c = coef(rng);
    se.beta.push_back([a, b, c, j](const Point& x, std::span<const double> others) {
      double s = a + c * std::cos(x[j]);
      for (double hk : others) s += b * hk * hk + std::sin(hk);
      return s;
    });
  }
  double bound = 0.0;
  for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << d); ++mask) {
    const double c = amp(rng), w = freq(rng), phi = phase(rng);
    bound = std::max(bound, c);
    se.gamma.emplace(mask, [c, w, phi](const Point&, std::span<const double> hs) {
      double s = 0.0;
      for (double hj : hs) s += hj;
      return c * std::cos(w * s + phi);
    });
  }
  se.gamma_bound = bound;
  return se;
}

/// Number of directions with l_j above the index-set floor.
inline int refinable_directions(const LevelIndex& l, int floor) {
  int e = 0;
  for (int v : l.levels())
    if (v > floor) ++e;
  return e;
}

/// Closed form of the higher-order plan's coefficients:
///   b(l) = sum_k alpha_k a_{|l| - n - k} C(e(l), k),
/// where e(l) counts directions that can be the refined image of a base grid.
inline Rational ho_coefficient_closed_form(int d, int n, const LevelIndex& l) {
  const auto a = combination_coefficients(d);
  const auto alpha = extrapolation_weights(d);
  const int e = refinable_directions(l, 0);
  Rational b{0};
  for (int k = 0; k <= std::min(d, e); ++k) {
    const int i = l.sum() - n - k;
    if (i < 0 || i >= d) continue;
    b += alpha[static_cast<std::size_t>(k)] * a[static_cast<std::size_t>(i)] * Rational(binomial(e, k), 1);
  }
  return b;
}

struct HoExportCheck {
  std::map<int, Rational> masses;  // per |l|_1
  bool masses_match_total = false;
  bool support_span_ok = false;
  bool closed_form_ok = false;
  bool pass() const { return masses_match_total && support_span_ok && closed_form_ok; }
};

/// Per-|l| coefficient totals of ho_plan(d, n): they must sum to the plan's
/// coefficient total, span |l| = n..n+2d-1, and each coefficient must match
/// the closed form above.
inline HoExportCheck check_hosg_vs_bl_export(int d, int n) {
  if (d < 1 || n < 0) throw std::invalid_argument("check_hosg_vs_bl_export: need d >= 1, n >= 0");
  const CombinationPlan plan = ho_plan(d, n);
  HoExportCheck check;
  check.masses = plan.level_masses();
  Rational total{0};
  for (const auto& [s, m] : check.masses) total += m;
  check.masses_match_total = total == plan.coefficient_sum();
  check.support_span_ok = !check.masses.empty() && check.masses.begin()->first == n &&
                          check.masses.rbegin()->first == n + 2 * d - 1;
  check.closed_form_ok = true;
  for (const auto& [l, c] : plan.terms())
    if (!(c == ho_coefficient_closed_form(d, n, l))) check.closed_form_ok = false;
  // The closed form must also vanish wherever the plan has no term.
  for (int s = n; s <= n + 2 * d - 1 && check.closed_form_ok; ++s)
    detail::for_each_composition(d, s, [&](const LevelIndex& l) {
      if (plan.terms().count(l) == 0 && !ho_coefficient_closed_form(d, n, l).is_zero()) check.closed_form_ok = false;
    });
  return check;
}

/// Normalization and cancellation system for d = 1..d_max; lemma_cancel for
/// d = 1..min(d_max, lemma_d_max). `weights`, if set, overrides alpha per d.
inline std::vector<IdentityReport> run_identity_checks(int d_max, int lemma_d_max, int trials, std::uint64_t seed,
                                                       const std::function<WeightOverride(int)>& weights = {}) {
  std::vector<IdentityReport> reports;
  for (int d = 1; d <= d_max; ++d) {
    const WeightOverride w = weights ? weights(d) : std::nullopt;
    reports.push_back(check_normalization(d, w));
    reports.push_back(check_cancellation_system(d, w));
    if (d <= lemma_d_max) reports.push_back(check_lemma_cancel(d, trials, seed + static_cast<std::uint64_t>(d), w));
  }
  return reports;
}

}  // namespace sparsecombine
