#include "mfc/kernel.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "mfc/errors.hpp"

namespace mfc {

FiniteGrid::FiniteGrid(std::vector<Point> points) : points_(std::move(points)) {
  if (points_.empty()) throw std::invalid_argument("grid is empty");
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (points_[i].size() != points_.front().size() || points_[i].size() < 1) {
      throw std::invalid_argument("grid points have inconsistent dimensions");
    }
    if (!points_[i].allFinite()) throw std::invalid_argument("grid point is not finite");
    for (std::size_t j = 0; j < i; ++j) {
      if (point_distance(points_[i], points_[j]) <= kSupportMergeTolerance) {
        throw std::invalid_argument("grid repeats point " + format_point(points_[i]));
      }
    }
  }
}

FiniteGrid FiniteGrid::on_line(const std::vector<double>& xs) {
  std::vector<Point> pts;
  pts.reserve(xs.size());
  for (double x : xs) pts.push_back(Point::Constant(1, x));
  return FiniteGrid(std::move(pts));
}

std::optional<std::size_t> FiniteGrid::index_of(const Point& x) const {
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (point_distance(points_[i], x) <= kSupportMergeTolerance) return i;
  }
  return std::nullopt;
}

namespace {

DiscreteMeasure measure_from_dense(const FiniteGrid& grid, std::span<const double> dense) {
  if (dense.size() != grid.size()) {
    throw std::invalid_argument("dense weight vector does not match grid size");
  }
  std::vector<Point> pts;
  std::vector<double> w;
  for (std::size_t i = 0; i < dense.size(); ++i) {
    if (dense[i] != 0.0) {
      pts.push_back(grid[i]);
      w.push_back(dense[i]);
    }
  }
  if (pts.empty()) throw std::invalid_argument("dense weight vector has no mass");
  return DiscreteMeasure(std::move(pts), std::move(w));
}

}  // namespace

GridLaw::GridLaw(const FiniteGrid& grid, DiscreteMeasure mu)
    : measure_(std::move(mu)), weights_(grid.size(), 0.0) {
  if (measure_.dimension() != grid.dimension()) {
    throw ModelError("measure dimension does not match the state grid");
  }
  for (std::size_t i = 0; i < measure_.size(); ++i) {
    const auto idx = grid.index_of(measure_.point(i));
    if (!idx) {
      throw ModelError("measure atom " + format_point(measure_.point(i)) +
                       " is not a point of the state grid");
    }
    weights_[*idx] = measure_.weight(i);
  }
  mean_ = mfc::mean(measure_);
}

GridLaw::GridLaw(const FiniteGrid& grid, std::span<const double> dense)
    : GridLaw(grid, measure_from_dense(grid, dense)) {}

std::vector<std::int64_t> GridLaw::key() const {
  std::vector<std::int64_t> key(weights_.size());
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    key[i] = std::llround(weights_[i] * kKeyWeightScale);
  }
  return key;
}

Population::Population(const FiniteGrid& actions, GridLaw law, std::vector<std::size_t> policy)
    : law_(std::move(law)),
      policy_(std::move(policy)),
      action_law_(DiscreteMeasure::dirac(actions[0])),
      action_weights_(actions.size(), 0.0) {
  if (policy_.size() != law_.weights().size()) {
    throw ModelError("policy does not cover every state of the grid");
  }
  for (std::size_t i = 0; i < policy_.size(); ++i) {
    if (policy_[i] >= actions.size()) {
      throw ModelError("policy action index out of range at state " + std::to_string(i));
    }
    action_weights_[policy_[i]] += law_.weight(i);
  }
  action_law_ = measure_from_dense(actions, action_weights_);
  // Keep the dense vector consistent with the canonicalized measure.
  std::fill(action_weights_.begin(), action_weights_.end(), 0.0);
  for (std::size_t i = 0; i < action_law_.size(); ++i) {
    action_weights_[*actions.index_of(action_law_.point(i))] = action_law_.weight(i);
  }
  action_mean_ = mfc::mean(action_law_);
}

TransitionKernel::TransitionKernel(FiniteGrid states, FiniteGrid actions, RowFunction row)
    : states_(std::move(states)), actions_(std::move(actions)), row_(std::move(row)) {
  if (!row_) throw std::invalid_argument("transition kernel callable is empty");
}

std::vector<double> TransitionKernel::raw_row(int stage, std::size_t state, std::size_t action,
                                              const Population& population) const {
  return row_(stage, state, action, population);
}

std::vector<double> TransitionKernel::row(int stage, std::size_t state, std::size_t action,
                                          const Population& population) const {
  auto r = row_(stage, state, action, population);
  auto fail = [&](const std::string& why) {
    std::ostringstream os;
    os << "kernel row at stage " << stage << ", state index " << state << ", action index "
       << action << " is not a probability vector: " << why;
    throw ModelError(os.str());
  };
  if (r.size() != states_.size()) fail("length " + std::to_string(r.size()));
  double total = 0.0;
  for (double p : r) {
    if (!std::isfinite(p) || p < 0.0) fail("negative or non-finite entry");
    total += p;
  }
  if (std::abs(total - 1.0) > kMassTolerance) {
    std::ostringstream os;
    os.precision(17);
    os << "mass " << total;
    fail(os.str());
  }
  return r;
}

std::vector<std::size_t> policy_indices(const TabularMap& policy, const FiniteGrid& states,
                                        const FiniteGrid& actions) {
  std::vector<std::size_t> idx(states.size());
  for (std::size_t i = 0; i < states.size(); ++i) {
    const Point& a = policy(states[i]);
    const auto j = actions.index_of(a);
    if (!j) throw ModelError("policy value " + format_point(a) + " is not an admissible action");
    idx[i] = *j;
  }
  return idx;
}

TabularMap policy_map(std::span<const std::size_t> indices, const FiniteGrid& states,
                      const FiniteGrid& actions) {
  if (indices.size() != states.size()) throw std::invalid_argument("policy length mismatch");
  std::vector<Point> values;
  values.reserve(indices.size());
  for (std::size_t a : indices) values.push_back(actions[a]);
  return TabularMap(states.points(), std::move(values));
}

GridLaw pushforward(const Population& population, const TransitionKernel& kernel, int stage) {
  const auto& states = kernel.states();
  std::vector<double> next(states.size(), 0.0);
  const auto w = population.state_weights();
  for (std::size_t x = 0; x < states.size(); ++x) {
    if (w[x] == 0.0) continue;
    const auto r = kernel.row(stage, x, population.action_of(x), population);
    for (std::size_t y = 0; y < r.size(); ++y) next[y] += w[x] * r[y];
  }
  return GridLaw(states, std::span<const double>(next));
}

DiscreteMeasure pushforward(const DiscreteMeasure& mu, const TabularMap& policy,
                            const TransitionKernel& kernel, int stage) {
  Population pop(kernel.actions(), GridLaw(kernel.states(), mu),
                 policy_indices(policy, kernel.states(), kernel.actions()));
  return pushforward(pop, kernel, stage).measure();
}

}  // namespace mfc
