#include <gtest/gtest.h>

#include "mfc/errors.hpp"
#include "mfc/model.hpp"
#include "mfc/model_config.hpp"
#include "support/generators.hpp"

using namespace mfc;

namespace {

TransitionKernel::RowFunction identity_rows(std::size_t S) {
  return [S](int, std::size_t x, std::size_t, const Population&) {
    std::vector<double> r(S, 0.0);
    r[x] = 1.0;
    return r;
  };
}

FiniteMFModel scalar_model(std::vector<double> xs, std::vector<double> as, StageCost f, TerminalCost g,
                           TransitionKernel::RowFunction row = {}) {
  const std::size_t S = xs.size();
  return FiniteMFModel(FiniteGrid::on_line(xs), FiniteGrid::on_line(as), 1,
                       row ? row : identity_rows(S), std::move(f), std::move(g));
}

StageCost zero_stage() {
  return [](int, std::size_t, std::size_t, const Population&) { return 0.0; };
}
TerminalCost zero_terminal() {
  return [](std::size_t, const GridLaw&) { return 0.0; };
}

}  // namespace

TEST(LiftedCosts, StageExamples) {
  const std::vector<double> xs = {1.0, 3.0};
  const auto mu = DiscreteMeasure::on_line(xs, {0.5, 0.5});
  const auto zero = scalar_model(xs, {0.0, 1.0}, zero_stage(), zero_terminal());
  const auto pol = TabularMap(mu.support(), {Point::Constant(1, 0.0), Point::Constant(1, 1.0)});
  EXPECT_EQ(lifted_stage_cost(zero, 0, mu, pol), 0.0);

  std::vector<double> as = {0.0, 1.0};
  const auto action_cost = scalar_model(
      xs, as, [as](int, std::size_t, std::size_t a, const Population&) { return as[a]; }, zero_terminal());
  EXPECT_DOUBLE_EQ(lifted_stage_cost(action_cost, 0, mu, pol), mean(image_measure(mu, pol))[0]);

  // f = x·μ̄ on ½δ_1 + ½δ_3: Σ w_i x_i μ̄ = 2·2.
  const auto cross = scalar_model(
      xs, as,
      [xs](int, std::size_t x, std::size_t, const Population& p) { return xs[x] * p.state_mean()[0]; },
      zero_terminal());
  EXPECT_NEAR(lifted_stage_cost(cross, 0, mu, pol), 0.5 * 1.0 * 2.0 + 0.5 * 3.0 * 2.0, 1e-15);
  EXPECT_NEAR(lifted_stage_cost(cross, 0, mu, pol), 4.0, 1e-15);

  EXPECT_THROW(lifted_stage_cost(cross, 1, mu, pol), std::out_of_range);
  EXPECT_THROW(lifted_stage_cost(cross, -1, mu, pol), std::out_of_range);
}

TEST(LiftedCosts, TerminalExamples) {
  const std::vector<double> xs = {-1.0, 0.0, 1.0, 2.0};
  const auto constant = scalar_model(xs, {0.0}, zero_stage(),
                                     [](std::size_t, const GridLaw&) { return 2.5; });
  EXPECT_EQ(lifted_terminal_cost(constant, DiscreteMeasure::on_line({-1.0, 2.0}, {0.4, 0.6})), 2.5);

  const auto square = scalar_model(xs, {0.0}, zero_stage(),
                                   [xs](std::size_t x, const GridLaw&) { return xs[x] * xs[x]; });
  EXPECT_DOUBLE_EQ(lifted_terminal_cost(square, DiscreteMeasure::on_line({-1.0, 1.0}, {0.5, 0.5})), 1.0);

  const auto var = scalar_model(xs, {0.0}, zero_stage(), [xs](std::size_t x, const GridLaw& law) {
    const double d = xs[x] - law.mean()[0];
    return d * d;
  });
  // μ̄ = 0.8, μ̄₂ = 2.2, variance 2.2 − 0.64.
  const auto mu = DiscreteMeasure::on_line({-1.0, 0.0, 2.0}, {0.2, 0.3, 0.5});
  EXPECT_NEAR(lifted_terminal_cost(var, mu), 2.2 - 0.8 * 0.8, 1e-14);
  EXPECT_NEAR(lifted_terminal_cost(var, mu), 1.56, 1e-14);
}

TEST(LiftedCosts, AffineInMixtureWithoutInteraction) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto inst = gen::random_finite_model(seed, 3, 2, 2, false);
    std::mt19937_64 rng(seed + 100);
    const DiscreteMeasure nu(inst.model.states().points(), gen::random_simplex(rng, 3));
    const auto pol = policy_map(std::vector<std::size_t>{1, 0, 1}, inst.model.states(), inst.model.actions());
    const double alpha = 0.61;
    const double lhs = lifted_stage_cost(inst.model, 1, mixture(alpha, inst.mu0, nu), pol);
    const double rhs = alpha * lifted_stage_cost(inst.model, 1, inst.mu0, pol) +
                       (1 - alpha) * lifted_stage_cost(inst.model, 1, nu, pol);
    EXPECT_NEAR(lhs, rhs, 1e-12);
  }
}

TEST(Validate, ReportsViolations) {
  const std::vector<double> xs = {0.0, 1.0};
  EXPECT_TRUE(validate(scalar_model(xs, {0.0}, zero_stage(), zero_terminal())).ok());

  const auto heavy = scalar_model(xs, {0.0}, zero_stage(), zero_terminal(),
                                  [](int, std::size_t, std::size_t, const Population&) {
                                    return std::vector<double>{0.5, 0.6};
                                  });
  const auto r1 = validate(heavy);
  ASSERT_FALSE(r1.ok());
  EXPECT_EQ(r1.violations.front().kind, Violation::Kind::Mass);

  const auto negative = scalar_model(xs, {0.0}, zero_stage(), zero_terminal(),
                                     [](int, std::size_t, std::size_t, const Population&) {
                                       return std::vector<double>{1.1, -0.1};
                                     });
  const auto r2 = validate(negative);
  ASSERT_FALSE(r2.ok());
  bool saw_negative = false;
  for (const auto& v : r2.violations) saw_negative = saw_negative || v.kind == Violation::Kind::NegativeEntry;
  EXPECT_TRUE(saw_negative);

  const auto nan_cost = scalar_model(
      xs, {0.0}, [](int, std::size_t x, std::size_t, const Population&) { return x == 1 ? NAN : 0.0; },
      zero_terminal());
  const auto r3 = validate(nan_cost);
  ASSERT_FALSE(r3.ok());
  EXPECT_EQ(r3.violations.front().kind, Violation::Kind::NonFiniteCost);
  EXPECT_EQ(r3.violations.front().state, 1u);
}

TEST(Validate, RandomModelsPass) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    EXPECT_TRUE(validate(gen::random_finite_model(seed, 3, 2, 3).model).ok());
  }
}

// Config families.

namespace {

Json base_config() {
  return Json::parse(R"({
    "kind": "finite", "states": [0, 1, 2], "actions": [-1, 1], "horizon": 2,
    "kernel": {"type": "identity"}, "initial": "uniform"
  })");
}

Population population_at(const FiniteMFModel& m, std::vector<double> w, std::vector<std::size_t> pol) {
  return Population(m.actions(), GridLaw(m.states(), std::span<const double>(w)), std::move(pol));
}

}  // namespace

TEST(Config, MeanRevertingInterpolates) {
  Json j = base_config();
  j["kernel"] = {{"type", "mean_reverting"}, {"theta", 0.5}, {"kappa", 0.25}, {"eta", 0.0}, {"noise", 0.3}};
  const auto sc = finite_scenario_from_json(j);
  EXPECT_FALSE(sc.model.no_interaction());
  // μ = δ_2 (mean 2), x = 0, a = +1: target 0 + 0.5·(2 − 0) + 0.25 = 1.25,
  // interpolation puts 0.75 on state 1 and 0.25 on state 2, then 30% uniform noise.
  const auto pop = population_at(sc.model, {0.0, 0.0, 1.0}, {1, 1, 1});
  const auto row = sc.model.kernel().row(0, 0, 1, pop);
  EXPECT_NEAR(row[0], 0.1, 1e-15);
  EXPECT_NEAR(row[1], 0.7 * 0.75 + 0.1, 1e-15);
  EXPECT_NEAR(row[2], 0.7 * 0.25 + 0.1, 1e-15);
}

TEST(Config, SoftmaxAndNoInteractionFlag) {
  Json j = base_config();
  j["kernel"] = {{"type", "softmax"}, {"beta_action", 1.0}, {"beta_distance", 0.5}};
  j["stage_cost"] = {{"type", "quadratic"}, {"q", 1.0}, {"r", 0.1}};
  j["terminal_cost"] = {{"type", "table"}, {"values", {1.0, 0.0, 2.0}}};
  const auto sc = finite_scenario_from_json(j);
  EXPECT_TRUE(sc.model.no_interaction());

  const auto pop = population_at(sc.model, {1.0 / 3, 1.0 / 3, 1.0 / 3}, {0, 0, 0});
  const auto row = sc.model.kernel().row(0, 1, 1, pop);
  // logits s_j·a − 0.5(s_j − 1)², a = 1: (−0.5, 1, 1.5)
  const double z = std::exp(-0.5) + std::exp(1.0) + std::exp(1.5);
  EXPECT_NEAR(row[0], std::exp(-0.5) / z, 1e-15);
  EXPECT_NEAR(row[2], std::exp(1.5) / z, 1e-15);

  j["kernel"]["beta_mu"] = 0.2;
  EXPECT_FALSE(finite_scenario_from_json(j).model.no_interaction());
}

TEST(Config, QuadraticCostFormula) {
  Json j = base_config();
  j["stage_cost"] = {{"type", "quadratic"}, {"q", 2.0},      {"x_ref", 0.5}, {"q_mean", 1.0}, {"r", 0.3},
                     {"r_mean", 0.4},       {"l", -1.0},     {"l_mean", 0.7}, {"cross", 0.2}};
  const auto sc = finite_scenario_from_json(j);
  const auto pop = population_at(sc.model, {0.2, 0.3, 0.5}, {0, 1, 1});
  const double m = 0.3 + 1.0;         // μ̄
  const double lam = -0.2 + 0.8;      // λ̄
  const double x = 2.0, a = 1.0;
  const double expected = 2.0 * (x - 0.5) * (x - 0.5) + (x - m) * (x - m) + 0.3 * a * a +
                          0.4 * lam * lam - x + 0.7 * m + 0.2 * x * m;
  EXPECT_NEAR(sc.model.stage_cost(0, 2, 1, pop), expected, 1e-14);
}

TEST(Config, PerStageListsMustMatchHorizon) {
  Json j = base_config();
  j["stage_cost"] = Json::array({{{"type", "zero"}}});
  try {
    finite_scenario_from_json(j);
    FAIL() << "expected ModelError";
  } catch (const ModelError& e) {
    EXPECT_NE(std::string(e.what()).find("stage_cost"), std::string::npos);
  }
  j["stage_cost"] = Json::array({{{"type", "zero"}}, {{"type", "constant"}, {"value", 1.0}}});
  EXPECT_NO_THROW(finite_scenario_from_json(j));
}

TEST(Config, RejectsUnknownTagsAndBadShapes) {
  Json j = base_config();
  j["kernel"] = {{"type", "teleport"}};
  EXPECT_THROW(finite_scenario_from_json(j), ModelError);
  j["kernel"] = {{"type", "table"}, {"rows", {{1.0}}}};
  EXPECT_THROW(finite_scenario_from_json(j), ModelError);
  j = base_config();
  j["initial"] = {{"support", {{7.0}}}, {"weights", {1.0}}};
  EXPECT_THROW(finite_scenario_from_json(j), ModelError);
  j = base_config();
  j.erase("horizon");
  EXPECT_THROW(finite_scenario_from_json(j), ModelError);
}

TEST(Config, FirstOrderTagBuildsComponents) {
  const auto sc = load_scenario(std::string(MFC_FIXTURE_DIR) + "/finite/first_order_herding.json").finite();
  ASSERT_TRUE(sc.model.first_order_components().has_value());
  EXPECT_TRUE(validate(sc.model).ok());
}

TEST(Config, ShippedFixturesValidate) {
  for (const char* name : {"zero_cost", "mean_reverting", "coupled_softmax", "classical_identity",
                           "classical_table", "classical_drift", "classical_softmax", "classical_two_state",
                           "first_order_herding", "first_order_crowding", "first_order_split"}) {
    const auto sc = load_scenario(std::string(MFC_FIXTURE_DIR) + "/finite/" + name + ".json").finite();
    EXPECT_TRUE(validate(sc.model).ok()) << name;
  }
}
