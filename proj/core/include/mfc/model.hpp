#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mfc/kernel.hpp"
#include "mfc/measure.hpp"

namespace mfc {

using StageCost = std::function<double(int stage, std::size_t state, std::size_t action,
                                       const Population& population)>;
using TerminalCost = std::function<double(std::size_t state, const GridLaw& law)>;

/// Components of a model with first order (linear in the measure) interactions:
///   P(x, μ, a, ᾶ⋆μ) = Σ_y μ(y) P̃(x, y, a, ᾶ(y)),
///   f(x, μ, a, ᾶ⋆μ) = Σ_y μ(y) f̃(x, y, a, ᾶ(y)),
///   g(x, μ)         = Σ_y μ(y) g̃(x, y).
struct FirstOrderComponents {
  std::function<std::vector<double>(int stage, std::size_t x, std::size_t y, std::size_t a,
                                    std::size_t b)>
      kernel;
  std::function<double(int stage, std::size_t x, std::size_t y, std::size_t a, std::size_t b)>
      stage_cost;
  std::function<double(std::size_t x, std::size_t y)> terminal_cost;
};

/// Finite-state, finite-action McKean-Vlasov control model over horizon n.
///
/// Immutable after construction. The callables must be pure: solvers call
/// them repeatedly and may do so from several threads.
class FiniteMFModel {
 public:
  FiniteMFModel(FiniteGrid states, FiniteGrid actions, int horizon,
                TransitionKernel::RowFunction kernel, StageCost stage_cost,
                TerminalCost terminal_cost);

  /// Builds kernel and costs by integrating the first order components
  /// against μ; the components stay available to first_order_check.
  static FiniteMFModel first_order(FiniteGrid states, FiniteGrid actions, int horizon,
                                   FirstOrderComponents components);

  const FiniteGrid& states() const { return kernel_.states(); }
  const FiniteGrid& actions() const { return kernel_.actions(); }
  int horizon() const { return horizon_; }
  const TransitionKernel& kernel() const { return kernel_; }

  double stage_cost(int stage, std::size_t state, std::size_t action,
                    const Population& population) const;
  double terminal_cost(std::size_t state, const GridLaw& law) const;

  /// Declares that kernel and costs ignore (μ, λ). Enables the classical
  /// per-state factorization check.
  bool no_interaction() const { return no_interaction_; }
  FiniteMFModel& declare_no_interaction(bool flag = true) {
    no_interaction_ = flag;
    return *this;
  }

  const std::optional<FirstOrderComponents>& first_order_components() const {
    return first_order_;
  }

  /// Copy with g replaced by g + c.
  FiniteMFModel with_terminal_shift(double c) const;

 private:
  TransitionKernel kernel_;
  int horizon_;
  StageCost stage_cost_;
  TerminalCost terminal_cost_;
  bool no_interaction_ = false;
  std::optional<FirstOrderComponents> first_order_;
};

/// f̂_k(μ, ᾶ) = Σ_i w_i f_k(x_i, μ, ᾶ(x_i), ᾶ⋆μ).
double lifted_stage_cost(const FiniteMFModel& model, int stage, const Population& population);
double lifted_stage_cost(const FiniteMFModel& model, int stage, const DiscreteMeasure& mu,
                         const TabularMap& policy);

/// ĝ(μ) = Σ_i w_i g(x_i, μ).
double lifted_terminal_cost(const FiniteMFModel& model, const GridLaw& law);
double lifted_terminal_cost(const FiniteMFModel& model, const DiscreteMeasure& mu);

struct Violation {
  enum class Kind { RowLength, NegativeEntry, Mass, NonFiniteCost, CallFailed };
  Kind kind;
  int stage;  // -1 for the terminal cost
  std::size_t state;
  std::size_t action;
  std::string detail;
};

struct ValidationReport {
  std::vector<Violation> violations;
  std::size_t rows_checked = 0;
  std::size_t costs_checked = 0;
  bool ok() const { return violations.empty(); }
  std::string summary(std::size_t max_items = 5) const;
};

/// Spot-checks row stochasticity and cost finiteness over a deterministic
/// sample of (μ, ᾶ): Diracs on each state, the uniform law and a few
/// pseudo-random laws, each paired with every constant policy and a few
/// pseudo-random policies.
ValidationReport validate(const FiniteMFModel& model);

}  // namespace mfc
