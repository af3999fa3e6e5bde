#include "mfc/dpp.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "mfc/errors.hpp"
#include "mfc/parallel.hpp"

namespace mfc {

namespace {

std::uint64_t saturating_mul(std::uint64_t a, std::uint64_t b) {
  if (a != 0 && b > std::numeric_limits<std::uint64_t>::max() / a) {
    return std::numeric_limits<std::uint64_t>::max();
  }
  return a * b;
}

std::uint64_t saturating_pow(std::uint64_t base, std::uint64_t exp) {
  std::uint64_t r = 1;
  for (std::uint64_t i = 0; i < exp; ++i) r = saturating_mul(r, base);
  return r;
}

}  // namespace

// All M^S maps in lexicographic order (state 0 most significant).
std::vector<std::vector<std::size_t>> enumerate_maps(std::size_t states, std::size_t actions) {
  const std::uint64_t count = saturating_pow(actions, states);
  if (count > std::uint64_t{1} << 24) {
    throw BudgetError("too many tabular maps to enumerate", count, std::uint64_t{1} << 24);
  }
  std::vector<std::vector<std::size_t>> maps;
  maps.reserve(count);
  std::vector<std::size_t> m(states, 0);
  for (std::uint64_t i = 0; i < count; ++i) {
    maps.push_back(m);
    for (std::size_t s = states; s-- > 0;) {
      if (++m[s] < actions) break;
      m[s] = 0;
    }
  }
  return maps;
}

namespace {

class Solver {
 public:
  Solver(const FiniteMFModel& model, const SolveOptions& options, SolveResult& out)
      : model_(model),
        options_(options),
        out_(out),
        maps_(enumerate_maps(model.states().size(), model.actions().size())) {}

  const ValueNode& value(int k, const GridLaw& law) {
    NodeKey key{k, law.key()};
    if (auto it = out_.value_cache.find(key); it != out_.value_cache.end()) return it->second;

    if (++expanded_ > options_.node_budget) {
      const std::uint64_t branching = maps_.size();
      std::uint64_t required = 0;
      for (int j = 0; j <= model_.horizon(); ++j) {
        required += saturating_pow(branching, static_cast<std::uint64_t>(j));
      }
      std::ostringstream os;
      os << "measure tree exceeds node budget " << options_.node_budget
         << "; up to " << required << " nodes may be required";
      throw BudgetError(os.str(), required, options_.node_budget);
    }

    ValueNode node{k, law.measure(), 0.0, {}, std::nullopt};
    if (k == model_.horizon()) {
      node.value = lifted_terminal_cost(model_, law);
    } else {
      double best = std::numeric_limits<double>::infinity();
      const std::vector<std::size_t>* best_map = nullptr;
      for (const auto& m : maps_) {
        const Population pop(model_.actions(), law, m);
        const double running = lifted_stage_cost(model_, k, pop);
        const GridLaw next = pushforward(pop, model_.kernel(), k);
        const double total = running + value(k + 1, next).value;
        if (total < best) {
          best = total;
          best_map = &m;
        }
      }
      if (best_map == nullptr) {
        throw NumericalError("no finite value at stage " + std::to_string(k), k);
      }
      node.value = best;
      node.argmin = *best_map;
      node.argmin_policy = policy_map(node.argmin, model_.states(), model_.actions());
    }
    return out_.value_cache.emplace(std::move(key), std::move(node)).first->second;
  }

 private:
  const FiniteMFModel& model_;
  SolveOptions options_;
  SolveResult& out_;
  std::vector<std::vector<std::size_t>> maps_;
  std::uint64_t expanded_ = 0;
};

void require_valid(const FiniteMFModel& model) {
  const auto report = validate(model);
  if (!report.ok()) throw ModelError("invalid model: " + report.summary());
}

}  // namespace

const ValueNode& SolveResult::node(int stage, const GridLaw& law) const {
  const auto it = value_cache.find(NodeKey{stage, law.key()});
  if (it == value_cache.end()) {
    throw std::out_of_range("no cached value node at stage " + std::to_string(stage));
  }
  return it->second;
}

SolveResult solve(const FiniteMFModel& model, const DiscreteMeasure& mu0,
                  const SolveOptions& options) {
  require_valid(model);
  const GridLaw law0(model.states(), mu0);

  SolveResult out;
  Solver solver(model, options, out);
  out.v0 = solver.value(0, law0).value;
  out.reachable_tree_size = out.value_cache.size();

  GridLaw law = law0;
  out.optimal_trajectory.push_back(law.measure());
  for (int k = 0; k < model.horizon(); ++k) {
    const ValueNode& node = out.node(k, law);
    out.optimal_policy_indices.push_back(node.argmin);
    out.optimal_policy_sequence.push_back(*node.argmin_policy);
    const Population pop(model.actions(), law, node.argmin);
    law = pushforward(pop, model.kernel(), k);
    out.optimal_trajectory.push_back(law.measure());
  }
  return out;
}

double policy_cost(const FiniteMFModel& model, const DiscreteMeasure& mu0,
                   std::span<const std::vector<std::size_t>> policies) {
  if (policies.size() != static_cast<std::size_t>(model.horizon())) {
    throw std::invalid_argument("policy sequence length " + std::to_string(policies.size()) +
                                " does not match horizon " + std::to_string(model.horizon()));
  }
  GridLaw law(model.states(), mu0);
  double total = 0.0;
  for (int k = 0; k < model.horizon(); ++k) {
    const Population pop(model.actions(), law, policies[k]);
    total += lifted_stage_cost(model, k, pop);
    law = pushforward(pop, model.kernel(), k);
  }
  return total + lifted_terminal_cost(model, law);
}

BruteForceResult brute_force(const FiniteMFModel& model, const DiscreteMeasure& mu0,
                             const BruteForceOptions& options) {
  require_valid(model);
  const std::size_t S = model.states().size();
  const std::size_t M = model.actions().size();
  const int n = model.horizon();
  const std::uint64_t per_stage = saturating_pow(M, S);
  const std::uint64_t total = saturating_pow(per_stage, static_cast<std::uint64_t>(n));
  if (total > options.sequence_cap) {
    std::ostringstream os;
    os << "brute force needs " << total << " policy sequences, cap is " << options.sequence_cap;
    throw BudgetError(os.str(), total, options.sequence_cap);
  }
  const auto maps = enumerate_maps(S, M);
  (void)GridLaw(model.states(), mu0);

  auto decode = [&](std::uint64_t idx) {
    std::vector<std::vector<std::size_t>> seq(n);
    for (int k = n; k-- > 0;) {
      seq[k] = maps[idx % per_stage];
      idx /= per_stage;
    }
    return seq;
  };

  const std::size_t workers = thread_count();
  struct Best {
    double value = std::numeric_limits<double>::infinity();
    std::uint64_t index = 0;
  };
  std::vector<Best> chunk_best(std::min<std::uint64_t>(workers, total));
  parallel_for(
      total,
      [&](std::size_t begin, std::size_t end, std::size_t chunk) {
        Best best;
        for (std::size_t i = begin; i < end; ++i) {
          const auto seq = decode(i);
          const double v = policy_cost(model, mu0, seq);
          if (v < best.value) best = {v, i};
        }
        chunk_best[chunk] = best;
      },
      chunk_best.size());

  Best best;
  for (const auto& b : chunk_best) {
    if (b.value < best.value) best = b;
  }
  return {best.value, decode(best.index), total};
}

double brute_force_value(const FiniteMFModel& model, const DiscreteMeasure& mu0,
                         const BruteForceOptions& options) {
  return brute_force(model, mu0, options).value;
}

FactorizationReport classical_factorization_check(const FiniteMFModel& model,
                                                  const DiscreteMeasure& mu0,
                                                  const SolveOptions& options) {
  if (!model.no_interaction()) {
    throw std::invalid_argument(
        "classical factorization requires a model declared free of mean-field interaction");
  }
  const auto& states = model.states();
  const auto& actions = model.actions();
  const std::size_t S = states.size();
  const int n = model.horizon();

  FactorizationReport report;
  report.state_values.assign(n + 1, std::vector<double>(S, 0.0));
  // Kernel and costs ignore the measure arguments, so any population serves.
  for (std::size_t x = 0; x < S; ++x) {
    const GridLaw dirac(states, DiscreteMeasure::dirac(states[x]));
    report.state_values[n][x] = model.terminal_cost(x, dirac);
  }
  for (int k = n - 1; k >= 0; --k) {
    for (std::size_t x = 0; x < S; ++x) {
      const GridLaw dirac(states, DiscreteMeasure::dirac(states[x]));
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t a = 0; a < actions.size(); ++a) {
        const Population pop(actions, dirac, std::vector<std::size_t>(S, a));
        const auto row = model.kernel().row(k, x, a, pop);
        double q = model.stage_cost(k, x, a, pop);
        for (std::size_t y = 0; y < S; ++y) q += row[y] * report.state_values[k + 1][y];
        best = std::min(best, q);
      }
      report.state_values[k][x] = best;
    }
  }

  const SolveResult solved = solve(model, mu0, options);
  report.stage_discrepancy.assign(n + 1, 0.0);
  for (const auto& [key, node] : solved.value_cache) {
    const GridLaw law(states, node.measure);
    double integral = 0.0;
    for (std::size_t x = 0; x < S; ++x) integral += law.weight(x) * report.state_values[node.stage][x];
    const double gap = std::abs(node.value - integral);
    report.stage_discrepancy[node.stage] = std::max(report.stage_discrepancy[node.stage], gap);
    report.max_discrepancy = std::max(report.max_discrepancy, gap);
    ++report.nodes_checked;
  }
  return report;
}

}  // namespace mfc
