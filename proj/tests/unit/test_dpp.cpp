#include <gtest/gtest.h>

#include <limits>
#include <random>

#include "mfc/dpp.hpp"
#include "mfc/errors.hpp"
#include "mfc/model_config.hpp"
#include "support/generators.hpp"

using namespace mfc;

namespace {

FiniteScenario fixture(const std::string& name) {
  return load_scenario(std::string(MFC_FIXTURE_DIR) + "/finite/" + name + ".json").finite();
}

std::vector<std::vector<std::size_t>> random_sequence(std::mt19937_64& rng, const FiniteMFModel& m) {
  std::vector<std::vector<std::size_t>> seq(m.horizon(), std::vector<std::size_t>(m.states().size()));
  for (auto& map : seq)
    for (auto& a : map) a = rng() % m.actions().size();
  return seq;
}

}  // namespace

TEST(EnumerateMaps, LexicographicOrder) {
  const auto maps = enumerate_maps(3, 2);
  ASSERT_EQ(maps.size(), 8u);
  EXPECT_EQ(maps.front(), (std::vector<std::size_t>{0, 0, 0}));
  EXPECT_EQ(maps[1], (std::vector<std::size_t>{0, 0, 1}));
  EXPECT_EQ(maps[4], (std::vector<std::size_t>{1, 0, 0}));
  EXPECT_EQ(maps.back(), (std::vector<std::size_t>{1, 1, 1}));
}

TEST(Solve, ZeroCostHasZeroValueAndSmallestMaps) {
  const auto sc = fixture("zero_cost");
  const auto r = solve(sc.model, sc.initial);
  EXPECT_EQ(r.v0, 0.0);
  for (const auto& map : r.optimal_policy_indices)
    for (auto a : map) EXPECT_EQ(a, 0u);
  EXPECT_EQ(r.optimal_trajectory.size(), static_cast<std::size_t>(sc.model.horizon() + 1));
}

TEST(Solve, OneStepMatchesDirectMinimum) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto inst = gen::random_finite_model(seed, 3, 2, 1);
    double best = std::numeric_limits<double>::infinity();
    for (const auto& map : enumerate_maps(3, 2)) {
      const auto pol = policy_map(map, inst.model.states(), inst.model.actions());
      const double c = lifted_stage_cost(inst.model, 0, inst.mu0, pol) +
                       lifted_terminal_cost(inst.model, pushforward(inst.mu0, pol, inst.model.kernel(), 0));
      best = std::min(best, c);
    }
    EXPECT_NEAR(solve(inst.model, inst.mu0).v0, best, 1e-12) << seed;
  }
}

TEST(Solve, MatchesBruteForce) {
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const auto inst = gen::random_finite_model(seed, seed % 2 ? 2 : 3, 2, seed % 2 ? 3 : 2);
    const auto r = solve(inst.model, inst.mu0);
    const auto bf = brute_force(inst.model, inst.mu0);
    EXPECT_NEAR(r.v0, bf.value, 1e-9 * std::max(1.0, std::abs(bf.value))) << seed;
    EXPECT_NEAR(policy_cost(inst.model, inst.mu0, bf.policies), bf.value, 1e-12);
  }
}

TEST(Solve, RollForwardAndConsistency) {
  for (std::uint64_t seed = 20; seed < 26; ++seed) {
    const auto inst = gen::random_finite_model(seed, 3, 2, 3);
    const auto r = solve(inst.model, inst.mu0);
    EXPECT_NEAR(policy_cost(inst.model, inst.mu0, r.optimal_policy_indices), r.v0, 1e-10);

    // v_k(μ) = f̂_k(μ, ᾶ*) + v_{k+1}(Φ(μ, ᾶ*)) at every cached node.
    for (const auto& [key, node] : r.value_cache) {
      if (node.stage == inst.model.horizon()) {
        EXPECT_NEAR(node.value, lifted_terminal_cost(inst.model, node.measure), 1e-12);
        continue;
      }
      const auto pol = policy_map(node.argmin, inst.model.states(), inst.model.actions());
      const GridLaw next(inst.model.states(),
                         pushforward(node.measure, pol, inst.model.kernel(), node.stage));
      const double rhs =
          lifted_stage_cost(inst.model, node.stage, node.measure, pol) + r.node(node.stage + 1, next).value;
      EXPECT_NEAR(node.value, rhs, 1e-10);
    }
  }
}

TEST(Solve, TerminalShiftAndSuboptimality) {
  std::mt19937_64 rng(5);
  for (std::uint64_t seed = 30; seed < 35; ++seed) {
    const auto inst = gen::random_finite_model(seed, 3, 3, 2);
    const double v0 = solve(inst.model, inst.mu0).v0;
    EXPECT_NEAR(solve(inst.model.with_terminal_shift(0.75), inst.mu0).v0, v0 + 0.75, 1e-12);
    for (int t = 0; t < 30; ++t) {
      const auto seq = random_sequence(rng, inst.model);
      EXPECT_GE(policy_cost(inst.model, inst.mu0, seq), v0 - 1e-12);
    }
  }
}

TEST(Solve, BudgetIsEnforced) {
  const auto inst = gen::random_finite_model(1, 3, 2, 3);
  try {
    solve(inst.model, inst.mu0, SolveOptions{3});
    FAIL() << "expected BudgetError";
  } catch (const BudgetError& e) {
    EXPECT_EQ(e.budget(), 3u);
    EXPECT_GT(e.required(), 3u);
  }
}

TEST(Solve, RejectsMeasureOffGrid) {
  const auto inst = gen::random_finite_model(1, 3, 2, 1);
  EXPECT_THROW(solve(inst.model, DiscreteMeasure::dirac(0.25)), ModelError);
}

TEST(Factorization, RequiresNoInteractionFlag) {
  const auto inst = gen::random_finite_model(3, 3, 2, 2, true);
  EXPECT_THROW(classical_factorization_check(inst.model, inst.mu0), std::invalid_argument);
}

TEST(Factorization, ClassicalModelsFactorize) {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const auto inst = gen::random_finite_model(seed, 3, 2, 3, false);
    const auto rep = classical_factorization_check(inst.model, inst.mu0);
    EXPECT_GT(rep.nodes_checked, 0u);
    EXPECT_LT(rep.max_discrepancy, 1e-10) << seed;
  }
}

// First order models.

namespace {

FiniteMFModel first_order_identity(int n, std::function<double(std::size_t, std::size_t)> g) {
  FirstOrderComponents c;
  c.kernel = [](int, std::size_t x, std::size_t, std::size_t, std::size_t) {
    std::vector<double> r(2, 0.0);
    r[x] = 1.0;
    return r;
  };
  c.stage_cost = [](int, std::size_t, std::size_t, std::size_t, std::size_t) { return 0.0; };
  c.terminal_cost = std::move(g);
  return FiniteMFModel::first_order(FiniteGrid::on_line({0.0, 1.0}), FiniteGrid::on_line({0.0, 1.0}), n,
                                    std::move(c));
}

// Random first order components on S = M = 2; generic tensors have no
// common minimizer across tuples.
FiniteMFModel random_first_order(std::uint64_t seed, int n) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  auto kernel = std::make_shared<std::vector<double>>();
  auto cost = std::make_shared<std::vector<double>>();
  auto term = std::make_shared<std::vector<double>>();
  for (int i = 0; i < n * 16; ++i) kernel->push_back(1.0 / (1.0 + std::exp(-2.0 * g(rng))));
  for (int i = 0; i < n * 16; ++i) cost->push_back(g(rng));
  for (int i = 0; i < 4; ++i) term->push_back(g(rng));
  FirstOrderComponents c;
  c.kernel = [kernel](int k, std::size_t x, std::size_t y, std::size_t a, std::size_t b) {
    const double p = (*kernel)[(((k * 2 + x) * 2 + y) * 2 + a) * 2 + b];
    return std::vector<double>{1.0 - p, p};
  };
  c.stage_cost = [cost](int k, std::size_t x, std::size_t y, std::size_t a, std::size_t b) {
    return (*cost)[(((k * 2 + x) * 2 + y) * 2 + a) * 2 + b];
  };
  c.terminal_cost = [term](std::size_t x, std::size_t y) { return (*term)[x * 2 + y]; };
  return FiniteMFModel::first_order(FiniteGrid::on_line({0.0, 1.0}), FiniteGrid::on_line({0.0, 1.0}), n,
                                    std::move(c));
}

}  // namespace

TEST(FirstOrder, TerminalTensorIntegratesToMean) {
  const auto model = first_order_identity(1, [](std::size_t x, std::size_t) { return static_cast<double>(x); });
  const auto tensors = first_order_value_tensors(model);
  ASSERT_EQ(tensors.size(), 2u);
  EXPECT_EQ(tensors[1].arity, 2);
  const std::vector<double> w = {0.3, 0.7};
  EXPECT_NEAR(integrate_tensor(tensors[1], w), 0.7, 1e-15);
  // Nothing to control: ∫ṽ_0 equals v_0 = mean.
  EXPECT_NEAR(integrate_tensor(tensors[0], w), 0.7, 1e-15);
  const auto rep = first_order_check(model, DiscreteMeasure::on_line({0.0, 1.0}, {0.3, 0.7}));
  EXPECT_LT(rep.max_discrepancy, 1e-14);
}

TEST(FirstOrder, RequiresComponentsAndGuardsSize) {
  const auto inst = gen::random_finite_model(0, 2, 2, 1);
  EXPECT_THROW(first_order_value_tensors(inst.model), std::invalid_argument);
  const auto model = random_first_order(0, 2);
  FirstOrderOptions tight;
  tight.max_entries = 16;
  EXPECT_THROW(first_order_value_tensors(model, tight), BudgetError);
  FirstOrderOptions short_horizon;
  short_horizon.max_horizon = 1;
  EXPECT_THROW(first_order_value_tensors(model, short_horizon), BudgetError);
}

TEST(FirstOrder, PerTupleMinimumUndershootsWithoutCommonMinimizer) {
  double largest_gap = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto model = random_first_order(seed, 2);
    const auto mu = DiscreteMeasure::on_line({0.0, 1.0}, {0.4, 0.6});
    const auto rep = first_order_check(model, mu);
    ASSERT_GT(rep.nodes_checked, 0u);
    const auto tensors = first_order_value_tensors(model);
    const auto r = solve(model, mu);
    // ∫ṽ_0 dμ^{⊗4} ≤ v_0(μ).
    const std::vector<double> w = {0.4, 0.6};
    const double integral = integrate_tensor(tensors[0], w);
    EXPECT_LE(integral, r.v0 + 1e-12) << seed;
    for (double gap : rep.stage_gap) EXPECT_GE(gap, 0.0);
    largest_gap = std::max(largest_gap, r.v0 - integral);
  }
  EXPECT_GT(largest_gap, 1e-6);
}

TEST(FirstOrder, ShippedFixturesAreExact) {
  for (const char* name : {"first_order_herding", "first_order_crowding", "first_order_split"}) {
    const auto sc = fixture(name);
    const auto rep = first_order_check(sc.model, sc.initial);
    EXPECT_LT(rep.max_discrepancy, 1e-12) << name;
  }
}
