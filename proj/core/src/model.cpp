#include "mfc/model.hpp"

#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

#include "mfc/errors.hpp"

namespace mfc {

FiniteMFModel::FiniteMFModel(FiniteGrid states, FiniteGrid actions, int horizon,
                             TransitionKernel::RowFunction kernel, StageCost stage_cost,
                             TerminalCost terminal_cost)
    : kernel_(std::move(states), std::move(actions), std::move(kernel)),
      horizon_(horizon),
      stage_cost_(std::move(stage_cost)),
      terminal_cost_(std::move(terminal_cost)) {
  if (horizon_ < 1) throw std::invalid_argument("model horizon must be >= 1");
  if (!stage_cost_ || !terminal_cost_) throw std::invalid_argument("model cost callable is empty");
}

FiniteMFModel FiniteMFModel::first_order(FiniteGrid states, FiniteGrid actions, int horizon,
                                         FirstOrderComponents c) {
  if (!c.kernel || !c.stage_cost || !c.terminal_cost) {
    throw std::invalid_argument("first order model needs kernel, stage and terminal components");
  }
  const std::size_t S = states.size();
  auto kernel = [c, S](int k, std::size_t x, std::size_t a, const Population& pop) {
    std::vector<double> row(S, 0.0);
    const auto w = pop.state_weights();
    for (std::size_t y = 0; y < S; ++y) {
      if (w[y] == 0.0) continue;
      const auto r = c.kernel(k, x, y, a, pop.action_of(y));
      if (r.size() != S) throw ModelError("first order kernel row has wrong length");
      for (std::size_t j = 0; j < S; ++j) row[j] += w[y] * r[j];
    }
    return row;
  };
  auto stage = [c, S](int k, std::size_t x, std::size_t a, const Population& pop) {
    double s = 0.0;
    const auto w = pop.state_weights();
    for (std::size_t y = 0; y < S; ++y) {
      if (w[y] != 0.0) s += w[y] * c.stage_cost(k, x, y, a, pop.action_of(y));
    }
    return s;
  };
  auto terminal = [c, S](std::size_t x, const GridLaw& law) {
    double s = 0.0;
    for (std::size_t y = 0; y < S; ++y) {
      if (law.weight(y) != 0.0) s += law.weight(y) * c.terminal_cost(x, y);
    }
    return s;
  };
  FiniteMFModel model(std::move(states), std::move(actions), horizon, kernel, stage, terminal);
  model.first_order_ = std::move(c);
  return model;
}

double FiniteMFModel::stage_cost(int stage, std::size_t state, std::size_t action,
                                 const Population& population) const {
  return stage_cost_(stage, state, action, population);
}

double FiniteMFModel::terminal_cost(std::size_t state, const GridLaw& law) const {
  return terminal_cost_(state, law);
}

FiniteMFModel FiniteMFModel::with_terminal_shift(double c) const {
  FiniteMFModel copy = *this;
  auto g = terminal_cost_;
  copy.terminal_cost_ = [g, c](std::size_t x, const GridLaw& law) { return g(x, law) + c; };
  if (copy.first_order_) {
    auto gt = copy.first_order_->terminal_cost;
    copy.first_order_->terminal_cost = [gt, c](std::size_t x, std::size_t y) {
      return gt(x, y) + c;
    };
  }
  return copy;
}

double lifted_stage_cost(const FiniteMFModel& model, int stage, const Population& population) {
  if (stage < 0 || stage >= model.horizon()) {
    throw std::out_of_range("stage " + std::to_string(stage) + " outside [0, " +
                            std::to_string(model.horizon()) + ")");
  }
  double s = 0.0;
  const auto w = population.state_weights();
  for (std::size_t x = 0; x < w.size(); ++x) {
    if (w[x] != 0.0) s += w[x] * model.stage_cost(stage, x, population.action_of(x), population);
  }
  return s;
}

double lifted_stage_cost(const FiniteMFModel& model, int stage, const DiscreteMeasure& mu,
                         const TabularMap& policy) {
  Population pop(model.actions(), GridLaw(model.states(), mu),
                 policy_indices(policy, model.states(), model.actions()));
  return lifted_stage_cost(model, stage, pop);
}

double lifted_terminal_cost(const FiniteMFModel& model, const GridLaw& law) {
  double s = 0.0;
  for (std::size_t x = 0; x < law.weights().size(); ++x) {
    if (law.weight(x) != 0.0) s += law.weight(x) * model.terminal_cost(x, law);
  }
  return s;
}

double lifted_terminal_cost(const FiniteMFModel& model, const DiscreteMeasure& mu) {
  return lifted_terminal_cost(model, GridLaw(model.states(), mu));
}

std::string ValidationReport::summary(std::size_t max_items) const {
  std::ostringstream os;
  if (ok()) {
    os << "valid (" << rows_checked << " rows, " << costs_checked << " costs checked)";
    return os.str();
  }
  os << violations.size() << " violation(s)";
  for (std::size_t i = 0; i < violations.size() && i < max_items; ++i) {
    const auto& v = violations[i];
    os << "; stage " << v.stage << " state " << v.state << " action " << v.action << ": "
       << v.detail;
  }
  return os.str();
}

namespace {

std::vector<std::vector<double>> sample_laws(std::size_t S) {
  std::vector<std::vector<double>> laws;
  for (std::size_t i = 0; i < S; ++i) {
    std::vector<double> w(S, 0.0);
    w[i] = 1.0;
    laws.push_back(w);
  }
  laws.emplace_back(S, 1.0 / static_cast<double>(S));
  std::mt19937_64 rng(0x5eed);
  std::exponential_distribution<double> e(1.0);
  for (int r = 0; r < 3; ++r) {
    std::vector<double> w(S);
    double t = 0.0;
    for (auto& x : w) t += (x = e(rng));
    for (auto& x : w) x /= t;
    laws.push_back(w);
  }
  return laws;
}

std::vector<std::vector<std::size_t>> sample_policies(std::size_t S, std::size_t M) {
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t a = 0; a < M; ++a) out.emplace_back(S, a);
  std::mt19937_64 rng(0xfeed);
  std::uniform_int_distribution<std::size_t> pick(0, M - 1);
  for (int r = 0; r < 3; ++r) {
    std::vector<std::size_t> p(S);
    for (auto& a : p) a = pick(rng);
    out.push_back(p);
  }
  return out;
}

}  // namespace

ValidationReport validate(const FiniteMFModel& model) {
  ValidationReport report;
  const std::size_t S = model.states().size();
  const std::size_t M = model.actions().size();
  const auto laws = sample_laws(S);
  const auto policies = sample_policies(S, M);

  auto record = [&](Violation::Kind kind, int k, std::size_t x, std::size_t a, std::string d) {
    // One entry per (kind, stage, state, action) keeps reports readable.
    for (const auto& v : report.violations) {
      if (v.kind == kind && v.stage == k && v.state == x && v.action == a) return;
    }
    report.violations.push_back({kind, k, x, a, std::move(d)});
  };

  for (const auto& dense : laws) {
    const GridLaw law(model.states(), std::span<const double>(dense));
    for (std::size_t x = 0; x < S; ++x) {
      ++report.costs_checked;
      try {
        const double g = model.terminal_cost(x, law);
        if (!std::isfinite(g)) record(Violation::Kind::NonFiniteCost, -1, x, 0, "terminal cost not finite");
      } catch (const std::exception& e) {
        record(Violation::Kind::CallFailed, -1, x, 0, e.what());
      }
    }
    for (const auto& policy : policies) {
      const Population pop(model.actions(), law, policy);
      for (int k = 0; k < model.horizon(); ++k) {
        for (std::size_t x = 0; x < S; ++x) {
          for (std::size_t a = 0; a < M; ++a) {
            ++report.rows_checked;
            ++report.costs_checked;
            try {
              const auto r = model.kernel().raw_row(k, x, a, pop);
              if (r.size() != S) {
                record(Violation::Kind::RowLength, k, x, a,
                       "row length " + std::to_string(r.size()));
              } else {
                double total = 0.0;
                bool negative = false;
                for (double p : r) {
                  if (!std::isfinite(p) || p < 0.0) negative = true;
                  total += p;
                }
                if (negative) record(Violation::Kind::NegativeEntry, k, x, a, "negative or non-finite entry");
                if (!(std::abs(total - 1.0) <= kMassTolerance)) {
                  std::ostringstream os;
                  os.precision(17);
                  os << "row mass " << total;
                  record(Violation::Kind::Mass, k, x, a, os.str());
                }
              }
              const double f = model.stage_cost(k, x, a, pop);
              if (!std::isfinite(f)) record(Violation::Kind::NonFiniteCost, k, x, a, "stage cost not finite");
            } catch (const std::exception& e) {
              record(Violation::Kind::CallFailed, k, x, a, e.what());
            }
          }
        }
      }
    }
  }
  return report;
}

}  // namespace mfc
