#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "mfc/errors.hpp"
#include "mfc/gaussian_mc.hpp"
#include "mfc/lq.hpp"
#include "support/generators.hpp"

using namespace mfc;

namespace {

LQModel one_step() {
  LQModel m = LQModel::zeros(1, 1, 1);
  m.stages[0].C(0, 0) = 1.0;
  m.stages[0].R(0, 0) = 1.0;
  m.Q(0, 0) = 1.0;
  return m;
}

GaussianState scalar_state(double mean, double var) {
  return {Eigen::VectorXd::Constant(1, mean), Eigen::MatrixXd::Constant(1, 1, var)};
}

MeanVarianceParams mv(double gamma, double b, double sigma, double delta, int n, double x0) {
  MeanVarianceParams p;
  p.gamma = gamma;
  p.b = b;
  p.sigma = sigma;
  p.delta = delta;
  p.n = n;
  p.x0 = x0;
  return p;
}

}  // namespace

TEST(Riccati, OneStepExample) {
  const auto sol = solve_riccati(one_step());
  ASSERT_EQ(sol.horizon(), 1);
  // V = R + CᵀΛ₁C = 2, W = 2, S = BᵀΛ₁C = 1, T = 1, Λ₀ = 1 − 1/2.
  EXPECT_DOUBLE_EQ(sol.V[0](0, 0), 2.0);
  EXPECT_DOUBLE_EQ(sol.W[0](0, 0), 2.0);
  EXPECT_DOUBLE_EQ(sol.S[0](0, 0), 1.0);
  EXPECT_DOUBLE_EQ(sol.T[0](0, 0), 1.0);
  EXPECT_DOUBLE_EQ(sol.Lambda[0](0, 0), 0.5);
  EXPECT_DOUBLE_EQ(sol.Gamma[0](0, 0), 0.5);
  EXPECT_EQ(sol.rho[0][0], 0.0);
  EXPECT_EQ(sol.chi[0], 0.0);

  const auto pol = optimal_policy(one_step(), sol);
  EXPECT_DOUBLE_EQ(pol.stages[0].gain_state(0, 0), -0.5);
  EXPECT_DOUBLE_EQ(pol.stages[0].gain_mean(0, 0), -0.5);
  EXPECT_EQ(pol.stages[0].offset[0], 0.0);
}

TEST(Riccati, ZeroCostGivesZeroSolution) {
  LQModel m = LQModel::zeros(2, 1, 3);
  for (auto& s : m.stages) s.R(0, 0) = 1.0;
  const auto sol = solve_riccati(m);
  for (int k = 0; k <= 3; ++k) {
    EXPECT_EQ(sol.Lambda[k].norm(), 0.0);
    EXPECT_EQ(sol.Gamma[k].norm(), 0.0);
    EXPECT_EQ(sol.rho[k].norm(), 0.0);
    EXPECT_EQ(sol.chi[k], 0.0);
  }
}

TEST(Riccati, MeanVarianceClosedForm) {
  for (const auto& p : {mv(1, 0.5, 1, 1, 2, 1), mv(2, 0.2, 0.5, 0.1, 10, -0.3), mv(0.5, 0.5, 1, 0.2, 5, 2)}) {
    const auto rec = solve_riccati(mean_variance_model(p));
    const auto cf = mean_variance_closed_form(p);
    const double ratio = p.sigma * p.sigma / (p.sigma * p.sigma + p.b * p.b * p.delta);
    for (int k = 0; k <= p.n; ++k) {
      const double lam = p.gamma / 2 * std::pow(ratio, p.n - k);
      const double chi = -(std::pow(1.0 / ratio, p.n - k) - 1.0) / (2 * p.gamma);
      EXPECT_NEAR(cf.Lambda[k](0, 0), lam, 1e-14);
      EXPECT_NEAR(cf.chi[k], chi, 1e-14);
      EXPECT_NEAR(rec.Lambda[k](0, 0), lam, 1e-12);
      EXPECT_NEAR(rec.Gamma[k](0, 0), 0.0, 1e-12);
      EXPECT_NEAR(rec.rho[k][0], -1.0, 1e-12);
      EXPECT_NEAR(rec.chi[k], chi, 1e-12);
    }
  }
}

TEST(Riccati, MeanVarianceValueExample) {
  const auto p = mv(1, 0.5, 1, 1, 2, 1);
  // v₀(δ₁) = −1 − ½(1.25² − 1)
  EXPECT_DOUBLE_EQ(mean_variance_value(p, 0, 1.0, 0.0), -1.28125);
  const auto sol = solve_riccati(mean_variance_model(p));
  EXPECT_NEAR(value_at(sol, 0, GaussianState::dirac(Eigen::VectorXd::Constant(1, 1.0))), -1.28125, 1e-14);
  EXPECT_NEAR(exact_cost(mean_variance_model(p), optimal_policy(mean_variance_model(p), sol)), -1.28125, 1e-14);
}

TEST(Riccati, MeanVarianceWithoutDrift) {
  const auto p = mv(1.5, 0.0, 1, 1, 3, 2.0);
  const auto model = mean_variance_model(p);
  const auto sol = solve_riccati(model);
  EXPECT_NEAR(sol.Lambda[0](0, 0), 0.75, 1e-15);
  EXPECT_EQ(sol.chi[0], 0.0);
  const auto pol = optimal_policy(model, sol);
  for (const auto& s : pol.stages) {
    EXPECT_EQ(s.gain_state(0, 0), 0.0);
    EXPECT_EQ(s.offset[0], 0.0);
  }
  EXPECT_NEAR(value_at(sol, 0, scalar_state(2.0, 0.0)), -2.0, 1e-15);
}

TEST(Riccati, ExplicitControlMeanVariance) {
  const auto p = mv(1, 0.5, 1, 1, 2, 1);
  const auto model = mean_variance_model(p);
  const auto ctl = explicit_control_coefficients(model, solve_riccati(model));
  ASSERT_EQ(ctl.size(), 2u);
  for (const auto& c : ctl) {
    EXPECT_NEAR(c.feedback(0, 0), -0.4, 1e-15);
    EXPECT_NEAR(c.initial_mean_gain(0, 0), 0.4, 1e-15);
    EXPECT_NEAR(c.constant[0], 0.4 * 1.5625, 1e-14);
  }
}

TEST(Riccati, ExplicitControlGeneralMeanVariance) {
  // K = −b/(σ² + b²Δ), o_k = b/(2Λ_{k+1}σ²), x̄_k = x0 + Σ_{j<k} bΔ o_j,
  // α_k = K X_k − K x0 + (o_k − K Σ_{j<k} bΔ o_j).
  const auto p = mv(2.0, 0.3, 0.7, 0.25, 6, 0.5);
  const auto model = mean_variance_model(p);
  const auto sol = solve_riccati(model);
  const auto ctl = explicit_control_coefficients(model, sol);
  const double s2 = p.sigma * p.sigma;
  const double K = -p.b / (s2 + p.b * p.b * p.delta);
  double drift = 0.0;
  for (int k = 0; k < p.n; ++k) {
    const double lam_next = p.gamma / 2 * std::pow(s2 / (s2 + p.b * p.b * p.delta), p.n - k - 1);
    const double o = p.b / (2 * lam_next * s2);
    EXPECT_NEAR(ctl[k].feedback(0, 0), K, 1e-13);
    EXPECT_NEAR(ctl[k].initial_mean_gain(0, 0), -K, 1e-13);
    EXPECT_NEAR(ctl[k].constant[0], o - K * drift, 1e-12);
    drift += p.b * p.delta * o;
  }
}

TEST(Riccati, ValueAtFormula) {
  const auto p = mv(1, 0.5, 1, 1, 2, 1);
  const auto cf = mean_variance_closed_form(p);
  for (int k = 0; k <= 2; ++k) {
    EXPECT_NEAR(value_at(cf, k, scalar_state(0.3, 2.0)), cf.Lambda[k](0, 0) * 2.0 - 0.3 + cf.chi[k], 1e-15);
    EXPECT_NEAR(value_at(cf, k, scalar_state(0.3, 2.0)), mean_variance_value(p, k, 0.3, 2.0), 1e-15);
  }
  // Discrete law with variance 1 and mean 0.
  EXPECT_NEAR(value_at(cf, 0, DiscreteMeasure::on_line({-1.0, 1.0}, {0.5, 0.5})),
              cf.Lambda[0](0, 0) + cf.chi[0], 1e-15);
}

TEST(Conditions, MeanVarianceNeedsPropagatedReading) {
  const auto rep = check_conditions(mean_variance_model(mv(1, 0.5, 1, 1, 3, 0)));
  EXPECT_TRUE(rep.passed());
  EXPECT_FALSE(rep.stages[0].c1_literal);
  EXPECT_TRUE(rep.stages[2].c1_literal);
}

TEST(Conditions, DegenerateStageIsNamed) {
  LQModel m = LQModel::zeros(1, 1, 2);
  m.stages[0].C(0, 0) = 1.0;
  m.stages[0].R(0, 0) = 1.0;
  m.Q(0, 0) = 1.0;  // stage 1 has no control cost and no control channel
  const auto rep = check_conditions(m);
  EXPECT_FALSE(rep.passed());
  EXPECT_NE(rep.first_failure().find("stage 1"), std::string::npos) << rep.first_failure();
  EXPECT_THROW(solve_riccati(m), std::invalid_argument);
  try {
    solve_riccati(m, true);
    FAIL() << "expected NumericalError";
  } catch (const NumericalError& e) {
    EXPECT_EQ(e.stage(), 1);
  }

  LQModel neg = one_step();
  neg.stages[0].R(0, 0) = -1.0;
  const auto r2 = check_conditions(neg);
  EXPECT_FALSE(r2.stages[0].c0);
  EXPECT_NE(r2.first_failure().find("(c0)"), std::string::npos);
}

TEST(Conditions, RandomModelsPass) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    EXPECT_TRUE(check_conditions(gen::random_lq_model(seed, 1 + seed % 3, 1 + seed % 2, 4)).passed());
  }
}

TEST(Riccati, ValidateNamesField) {
  LQModel m = one_step();
  m.stages[0].Q = Eigen::MatrixXd::Zero(2, 2);
  try {
    m.validate();
    FAIL() << "expected invalid_argument";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("Q"), std::string::npos) << e.what();
  }
}

// Properties on random models.

TEST(RiccatiProperties, PsdValueMatchesCostAndStationary) {
  std::mt19937_64 rng(42);
  for (std::uint64_t seed = 0; seed < 15; ++seed) {
    const int d = 1 + seed % 3, m = 1 + seed % 2, n = 2 + seed % 4;
    const auto model = gen::random_lq_model(seed, d, m, n);
    const auto sol = solve_riccati(model);
    for (int k = 0; k <= n; ++k) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> e1(sol.Lambda[k]), e2(sol.Gamma[k]);
      EXPECT_GE(e1.eigenvalues().minCoeff(), -1e-10);
      EXPECT_GE(e2.eigenvalues().minCoeff(), -1e-10);
    }
    const auto pol = optimal_policy(model, sol);
    const double w0 = value_at(sol, 0, moments(model.initial));
    const double j = exact_cost(model, pol);
    EXPECT_NEAR(j, w0, 1e-9 * std::max(1.0, std::abs(w0))) << seed;

    const auto traj = moment_trajectory(model, pol);
    for (int k = 0; k < n; ++k) {
      const Eigen::VectorXd x = gen::gaussian_matrix(rng, d, 1);
      const auto r = stationarity_residual(model, sol, pol, k, x, traj[k].mean);
      EXPECT_LT(r.norm(), 1e-9) << seed << " stage " << k;
    }

    for (int t = 0; t < 5; ++t) {
      AffinePolicy q = pol;
      const auto dir = gen::random_affine_policy(rng, d, m, n);
      for (int k = 0; k < n; ++k) {
        q.stages[k].gain_state += 1e-2 * dir.stages[k].gain_state;
        q.stages[k].gain_mean += 1e-2 * dir.stages[k].gain_mean;
        q.stages[k].offset += 1e-2 * dir.stages[k].offset;
      }
      EXPECT_GE(exact_cost(model, q), j - 1e-12);
    }
  }
}

TEST(RiccatiProperties, MeanPropagatorsFollowOptimalMeans) {
  const auto model = gen::random_lq_model(9, 2, 1, 4);
  const auto sol = solve_riccati(model);
  const auto pol = optimal_policy(model, sol);
  const auto traj = moment_trajectory(model, pol);
  const auto ctl = explicit_control_coefficients(model, sol);
  const Eigen::VectorXd m0 = moments(model.initial).mean;
  for (int k = 0; k < 4; ++k) {
    // E[α_k] from the explicit form and from the feedback form.
    const Eigen::VectorXd a_explicit =
        ctl[k].feedback * traj[k].mean + ctl[k].initial_mean_gain * m0 + ctl[k].constant;
    const Eigen::VectorXd a_feedback = pol.action(k, traj[k].mean, traj[k].mean);
    EXPECT_LT((a_explicit - a_feedback).norm(), 1e-10);
  }
  const auto prop = mean_propagators(sol);
  EXPECT_TRUE(prop[0].isIdentity());
  EXPECT_EQ(prop.size(), 5u);
}
