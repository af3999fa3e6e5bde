#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "mfc/measure.hpp"

namespace mfc {

/// Ordered, duplicate-free set of points sharing one dimension.
class FiniteGrid {
 public:
  explicit FiniteGrid(std::vector<Point> points);
  static FiniteGrid on_line(const std::vector<double>& xs);

  std::size_t size() const { return points_.size(); }
  int dimension() const { return static_cast<int>(points_.front().size()); }
  const Point& operator[](std::size_t i) const { return points_[i]; }
  const std::vector<Point>& points() const { return points_; }
  // First coordinate of point i.
  double scalar(std::size_t i) const { return points_[i][0]; }
  std::optional<std::size_t> index_of(const Point& x) const;

 private:
  std::vector<Point> points_;
};

/// A measure on a grid together with its dense weight vector and mean.
class GridLaw {
 public:
  /// Throws ModelError if an atom of mu is not a grid point.
  GridLaw(const FiniteGrid& grid, DiscreteMeasure mu);
  /// Dense weights in grid order; must be a probability vector.
  GridLaw(const FiniteGrid& grid, std::span<const double> dense);

  const DiscreteMeasure& measure() const { return measure_; }
  std::span<const double> weights() const { return weights_; }
  double weight(std::size_t i) const { return weights_[i]; }
  const Eigen::VectorXd& mean() const { return mean_; }

  /// Stage-free memo key: dense weights rounded to 12 decimals.
  std::vector<std::int64_t> key() const;

 private:
  DiscreteMeasure measure_;
  std::vector<double> weights_;
  Eigen::VectorXd mean_;
};

/// Everything a finite McKean-Vlasov kernel or cost may look at for one
/// stage: the state law μ, the feedback map as action indices, and the
/// induced action law λ = ᾶ⋆μ.
class Population {
 public:
  Population(const FiniteGrid& actions, GridLaw law, std::vector<std::size_t> policy);

  const GridLaw& law() const { return law_; }
  const DiscreteMeasure& mu() const { return law_.measure(); }
  std::span<const double> state_weights() const { return law_.weights(); }
  const Eigen::VectorXd& state_mean() const { return law_.mean(); }

  std::span<const std::size_t> policy() const { return policy_; }
  std::size_t action_of(std::size_t state) const { return policy_[state]; }

  const DiscreteMeasure& lambda() const { return action_law_; }
  std::span<const double> action_weights() const { return action_weights_; }
  const Eigen::VectorXd& action_mean() const { return action_mean_; }

 private:
  GridLaw law_;
  std::vector<std::size_t> policy_;
  DiscreteMeasure action_law_;
  std::vector<double> action_weights_;
  Eigen::VectorXd action_mean_;
};

/// Measure-dependent transition kernel P_{k+1}(x, μ, a, λ, ·) on a finite grid.
/// `stage` is the index k of the transition k -> k+1.
class TransitionKernel {
 public:
  using RowFunction = std::function<std::vector<double>(
      int stage, std::size_t state, std::size_t action, const Population& population)>;

  TransitionKernel(FiniteGrid states, FiniteGrid actions, RowFunction row);

  const FiniteGrid& states() const { return states_; }
  const FiniteGrid& actions() const { return actions_; }

  /// Raw row as returned by the callable, no validation.
  std::vector<double> raw_row(int stage, std::size_t state, std::size_t action,
                              const Population& population) const;

  /// Row validated as a probability vector; throws ModelError naming the
  /// stage and state index otherwise.
  std::vector<double> row(int stage, std::size_t state, std::size_t action,
                          const Population& population) const;

 private:
  FiniteGrid states_;
  FiniteGrid actions_;
  RowFunction row_;
};

/// Action indices of a tabular map whose domain is the state grid.
std::vector<std::size_t> policy_indices(const TabularMap& policy, const FiniteGrid& states,
                                        const FiniteGrid& actions);
TabularMap policy_map(std::span<const std::size_t> indices, const FiniteGrid& states,
                      const FiniteGrid& actions);

/// Φ_{k+1}(μ, ᾶ)(x') = Σ_x μ(x) P_{k+1}(x, μ, ᾶ(x), ᾶ⋆μ, x').
GridLaw pushforward(const Population& population, const TransitionKernel& kernel, int stage);

DiscreteMeasure pushforward(const DiscreteMeasure& mu, const TabularMap& policy,
                            const TransitionKernel& kernel, int stage);

}  // namespace mfc
