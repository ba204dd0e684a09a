#pragma once

// Combination plans: finite signed maps from level indices to exact rational
// coefficients, plus the constructors for the classical combination
// technique, multivariate extrapolation and their composition.

#include "sparsecombine/grid.hpp"
#include "sparsecombine/rational.hpp"

#include <nlohmann/json.hpp>

#include <bit>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace sparsecombine {

class CombinationPlan {
 public:
  CombinationPlan() = default;
  CombinationPlan(int dim, std::string label, int n = -1) : dim_(dim), n_(n), label_(std::move(label)) {
    if (dim < 1) throw std::invalid_argument("CombinationPlan: dimension must be >= 1");
  }

  int dim() const { return dim_; }
  /// Level parameter the plan was built for, -1 if not applicable.
  int n() const { return n_; }
  const std::string& label() const { return label_; }
  void set_label(std::string label) { label_ = std::move(label); }

  /// Nonzero terms, ordered lexicographically by level.
  const std::map<LevelIndex, Rational>& terms() const { return terms_; }
  std::size_t size() const { return terms_.size(); }

  Rational coefficient(const LevelIndex& l) const {
    auto it = terms_.find(l);
    return it == terms_.end() ? Rational{0} : it->second;
  }

  /// Accumulates `coeff` onto level `l`; exact zeros are dropped.
  void add(const LevelIndex& l, const Rational& coeff) {
    if (l.dim() != dim_)
      throw std::invalid_argument("CombinationPlan: level " + l.to_string() + " has wrong dimension");
    ++visits_[l];
    if (coeff.is_zero()) return;
    auto [it, inserted] = terms_.try_emplace(l, coeff);
    if (!inserted) {
      it->second += coeff;
      if (it->second.is_zero()) terms_.erase(it);
    }
  }

  Rational coefficient_sum() const {
    Rational s{0};
    for (const auto& [l, c] : terms_) s += c;
    return s;
  }

  /// Every level shifted by `offset` in each direction.
  CombinationPlan shifted(int offset) const {
    CombinationPlan out(dim_, label_, n_);
    out.level_shift_ = level_shift_ + offset;
    for (const auto& [l, c] : terms_) out.terms_.emplace(l.shifted(offset), c);
    for (const auto& [l, v] : visits_) out.visits_.emplace(l.shifted(offset), v);
    return out;
  }
  int level_shift() const { return level_shift_; }
  void set_level_shift(int shift) { level_shift_ = shift; }

  /// How often each level was touched while the plan was assembled,
  /// including levels whose coefficients cancelled.
  const std::map<LevelIndex, int>& visits() const { return visits_; }

  /// Total coefficient per |l|_1.
  std::map<int, Rational> level_masses() const {
    std::map<int, Rational> masses;
    for (const auto& [l, c] : terms_) masses[l.sum()] += c;
    return masses;
  }

 private:
  int dim_ = 1;
  int n_ = -1;
  int level_shift_ = 0;
  std::string label_;
  std::map<LevelIndex, Rational> terms_;
  std::map<LevelIndex, int> visits_;
};

namespace detail {

/// Calls fn(levels) for every l in N_0^d with |l|_1 == total.
template <class Fn>
void for_each_composition(int d, int total, Fn&& fn) {
  std::vector<int> l(static_cast<std::size_t>(d), 0);
  auto recurse = [&](auto&& self, int j, int remaining) -> void {
    if (j == d - 1) {
      l[static_cast<std::size_t>(j)] = remaining;
      fn(LevelIndex(l));
      return;
    }
    for (int v = remaining; v >= 0; --v) {
      l[static_cast<std::size_t>(j)] = v;
      self(self, j + 1, remaining - v);
    }
  };
  recurse(recurse, 0, total);
}

}  // namespace detail

/// a_i = (-1)^{d-1-i} C(d-1, i), i = 0..d-1.
inline std::vector<Rational> combination_coefficients(int d) {
  if (d < 1) throw std::invalid_argument("combination_coefficients: d must be >= 1");
  std::vector<Rational> a(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) {
    Rational c(binomial(d - 1, i), 1);
    a[static_cast<std::size_t>(i)] = ((d - 1 - i) % 2 == 0) ? c : -c;
  }
  return a;
}

/// Classical combination technique on the Smolyak set |l|_1 <= n.
inline CombinationPlan standard_plan(int d, int n) {
  if (d < 1) throw std::invalid_argument("standard_plan: d must be >= 1");
  if (n < 0) throw std::invalid_argument("standard_plan: n must be >= 0");
  const auto a = combination_coefficients(d);
  CombinationPlan plan(d, "standard", n);
  for (int i = 0; i < d; ++i)
    detail::for_each_composition(d, n + i, [&](const LevelIndex& l) { plan.add(l, a[static_cast<std::size_t>(i)]); });
  return plan;
}

/// alpha_k = (-4)^k / (-3)^d, k = 0..d.
inline std::vector<Rational> extrapolation_weights(int d) {
  if (d < 1) throw std::invalid_argument("extrapolation_weights: d must be >= 1");
  const Rational denom = pow(Rational{-3}, static_cast<unsigned>(d));
  std::vector<Rational> alpha(static_cast<std::size_t>(d) + 1);
  for (int k = 0; k <= d; ++k) alpha[static_cast<std::size_t>(k)] = pow(Rational{-4}, static_cast<unsigned>(k)) / denom;
  return alpha;
}

/// The 2^d-grid multivariate extrapolation around base level `l`.
inline CombinationPlan extrapolation_plan(const LevelIndex& l) {
  const int d = l.dim();
  if (d > 30) throw std::invalid_argument("extrapolation_plan: dimension too large");
  const auto alpha = extrapolation_weights(d);
  CombinationPlan plan(d, "extrapolation");
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << d); ++mask)
    plan.add(l.refine_mask(mask), alpha[static_cast<std::size_t>(std::popcount(mask))]);
  return plan;
}

/// Replaces every grid of `base` by its extrapolation and accumulates.
inline CombinationPlan compose_with_extrapolation(const CombinationPlan& base) {
  const int d = base.dim();
  const auto alpha = extrapolation_weights(d);
  CombinationPlan plan(d, base.label(), base.n());
  for (const auto& [l, c] : base.terms())
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << d); ++mask)
      plan.add(l.refine_mask(mask), c * alpha[static_cast<std::size_t>(std::popcount(mask))]);
  plan.set_level_shift(base.level_shift());
  return plan;
}

/// Higher-order combination: extrapolate every grid of standard_plan(d, n),
/// then combine.
inline CombinationPlan ho_plan(int d, int n) {
  auto plan = compose_with_extrapolation(standard_plan(d, n));
  plan.set_label("ho");
  return plan;
}

struct PlanDof {
  std::uint64_t dof_unique = 0;  // each distinct level once
  std::uint64_t dof_total = 0;   // every level as often as assembly touched it
};

inline PlanDof plan_dof(const CombinationPlan& plan) {
  PlanDof dof;
  for (const auto& [l, c] : plan.terms()) dof.dof_unique += l.node_count();
  for (const auto& [l, visits] : plan.visits()) dof.dof_total += static_cast<std::uint64_t>(visits) * l.node_count();
  if (dof.dof_total < dof.dof_unique) dof.dof_total = dof.dof_unique;
  return dof;
}

/// {"d", "n", "label", "level_shift", "coefficient_sum", "terms": [{"levels", "coeff"}], "level_masses"}
inline nlohmann::json plan_to_json(const CombinationPlan& plan) {
  nlohmann::json terms = nlohmann::json::array();
  for (const auto& [l, c] : plan.terms())
    terms.push_back({{"levels", std::vector<int>(l.levels().begin(), l.levels().end())}, {"coeff", c.to_string()}});
  nlohmann::json masses = nlohmann::json::array();
  for (const auto& [s, m] : plan.level_masses()) masses.push_back({{"level_sum", s}, {"mass", m.to_string()}});
  return {{"d", plan.dim()},
          {"n", plan.n()},
          {"label", plan.label()},
          {"level_shift", plan.level_shift()},
          {"coefficient_sum", plan.coefficient_sum().to_string()},
          {"terms", std::move(terms)},
          {"level_masses", std::move(masses)}};
}

inline CombinationPlan plan_from_json(const nlohmann::json& j) {
  CombinationPlan plan(j.at("d").get<int>(), j.value("label", std::string{}), j.value("n", -1));
  for (const auto& term : j.at("terms"))
    plan.add(LevelIndex(term.at("levels").get<std::vector<int>>()), Rational::parse(term.at("coeff").get<std::string>()));
  // Stored levels already include the shift.
  plan.set_level_shift(j.value("level_shift", 0));
  return plan;
}

}  // namespace sparsecombine
