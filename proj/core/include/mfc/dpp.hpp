#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "mfc/model.hpp"

namespace mfc {

/// All M^S tabular maps as action indices, lexicographic with state 0 most
/// significant.
std::vector<std::vector<std::size_t>> enumerate_maps(std::size_t states, std::size_t actions);

/// Memo key: stage plus the law's dense weights rounded to 12 decimals.
struct NodeKey {
  int stage;
  std::vector<std::int64_t> weights;
  auto operator<=>(const NodeKey&) const = default;
};

struct ValueNode {
  int stage;
  DiscreteMeasure measure;
  double value;
  // Action index per state; empty at the terminal stage.
  std::vector<std::size_t> argmin;
  std::optional<TabularMap> argmin_policy;
};

struct SolveOptions {
  std::uint64_t node_budget = 2'000'000;
};

struct SolveResult {
  double v0 = 0.0;
  std::vector<TabularMap> optimal_policy_sequence;
  std::vector<std::vector<std::size_t>> optimal_policy_indices;
  // μ_0, ..., μ_n along the optimal flow.
  std::vector<DiscreteMeasure> optimal_trajectory;
  std::size_t reachable_tree_size = 0;
  std::map<NodeKey, ValueNode> value_cache;

  const ValueNode& node(int stage, const GridLaw& law) const;
};

/// Exact backward recursion v_k(μ) = min_ᾶ [f̂_k(μ, ᾶ) + v_{k+1}(Φ_{k+1}(μ, ᾶ))],
/// v_n = ĝ, over the tree of measures reachable from μ0. The minimum enumerates
/// all M^S tabular maps; ties go to the lexicographically smallest map in
/// (state index, action index) order.
///
/// Throws ModelError if validate(model) reports violations or μ0 is not on
/// the state grid, and BudgetError if more than `node_budget` distinct nodes
/// would be expanded.
SolveResult solve(const FiniteMFModel& model, const DiscreteMeasure& mu0,
                  const SolveOptions& options = {});

/// J(α) = Σ_k f̂_k(μ_k, ᾶ_k) + ĝ(μ_n) along the measure flow μ_{k+1} = Φ_{k+1}(μ_k, ᾶ_k).
double policy_cost(const FiniteMFModel& model, const DiscreteMeasure& mu0,
                   std::span<const std::vector<std::size_t>> policies);

struct BruteForceOptions {
  std::uint64_t sequence_cap = 10'000'000;
};

struct BruteForceResult {
  double value;
  std::vector<std::vector<std::size_t>> policies;
  std::uint64_t sequences = 0;
};

/// Minimum of policy_cost over all M^(S·n) sequences of tabular maps.
/// Independent of solve(): no memoization, no recursion on values.
BruteForceResult brute_force(const FiniteMFModel& model, const DiscreteMeasure& mu0,
                             const BruteForceOptions& options = {});
double brute_force_value(const FiniteMFModel& model, const DiscreteMeasure& mu0,
                         const BruteForceOptions& options = {});

struct FactorizationReport {
  // ṽ_k(x) per stage k = 0..n, from per-state backward induction.
  std::vector<std::vector<double>> state_values;
  // Max over cached nodes at stage k of |v_k(μ) − Σ_i w_i ṽ_k(x_i)|.
  std::vector<double> stage_discrepancy;
  double max_discrepancy = 0.0;
  std::size_t nodes_checked = 0;
};

/// Requires model.no_interaction(); throws std::invalid_argument otherwise.
FactorizationReport classical_factorization_check(const FiniteMFModel& model,
                                                  const DiscreteMeasure& mu0,
                                                  const SolveOptions& options = {});

/// ṽ_k on E^(2^(n−k+1)), flattened with the first coordinate most
/// significant. Coordinates are (x_1..x_p, y_1..y_p), p = 2^(n−k).
struct ValueTensor {
  int stage = 0;
  int arity = 0;
  std::size_t base = 0;
  std::vector<double> values;

  double at(std::span<const std::size_t> coords) const;
};

struct FirstOrderOptions {
  int max_horizon = 3;
  std::size_t max_states = 3;
  std::uint64_t max_entries = std::uint64_t{1} << 20;
};

/// Builds ṽ_n(x, y) = g̃(x, y) and, backwards,
///   ṽ_k(x, y) = min_ᾶ [ f̃_k(x_1, y_1, ᾶ(x_1), ᾶ(y_1))
///                + Σ_{x'} ṽ_{k+1}(x') Π_i P̃_{k+1}(x_i, y_i, ᾶ(x_i), ᾶ(y_i), x'_i) ],
/// the minimum taken separately for every tuple. Returns tensors for
/// stages 0..n. Throws std::invalid_argument if the model has no first
/// order components, BudgetError on the size guard.
std::vector<ValueTensor> first_order_value_tensors(const FiniteMFModel& model,
                                                   const FirstOrderOptions& options = {});
ValueTensor first_order_value_tensor(const FiniteMFModel& model, int stage,
                                     const FirstOrderOptions& options = {});

/// ∫ ṽ dμ^{⊗arity}.
double integrate_tensor(const ValueTensor& tensor, std::span<const double> weights);

struct FirstOrderReport {
  std::vector<double> stage_discrepancy;
  // Largest positive v_k(μ) − ∫ṽ_k; the tensor recursion minimizes per tuple
  // so it can only undershoot.
  std::vector<double> stage_gap;
  double max_discrepancy = 0.0;
  std::size_t nodes_checked = 0;
};

FirstOrderReport first_order_check(const FiniteMFModel& model, const DiscreteMeasure& mu0,
                                   const FirstOrderOptions& options = {},
                                   const SolveOptions& solve_options = {});

}  // namespace mfc
