#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "mfc/measure.hpp"

namespace mfc {

/// First two moments of a law on R^d. Gaussian laws are described exactly;
/// the LQ value functions and costs only ever see these two moments.
struct GaussianState {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;

  static GaussianState dirac(const Eigen::VectorXd& x);
  static GaussianState from_measure(const DiscreteMeasure& mu);
  int dimension() const { return static_cast<int>(mean.size()); }
};

/// Initial law ξ: Gaussian moments or an explicit discrete measure.
using InitialLaw = std::variant<GaussianState, DiscreteMeasure>;
GaussianState moments(const InitialLaw& law);

/// Coefficients of one stage k of
///   X_{k+1} = B X + B̄ E[X] + C α + C̄ E[α] + (D X + D̄ E[X] + H α + H̄ E[α]) ε_{k+1}
/// and of the running cost
///   XᵀQX + E[X]ᵀQ̄E[X] + LᵀX + L̄ᵀE[X] + αᵀRα + E[α]ᵀR̄E[α].
struct LQStage {
  Eigen::MatrixXd B, Bbar, D, Dbar;  // d×d
  Eigen::MatrixXd C, Cbar, H, Hbar;  // d×m
  Eigen::MatrixXd Q, Qbar;           // d×d symmetric
  Eigen::MatrixXd R, Rbar;           // m×m symmetric
  Eigen::VectorXd L, Lbar;           // d

  /// All-zero stage of the given dimensions.
  static LQStage zeros(int d, int m);
};

struct LQModel {
  int d = 1;
  int m = 1;
  std::vector<LQStage> stages;  // k = 0..n-1
  Eigen::MatrixXd Q, Qbar;      // terminal
  Eigen::VectorXd L, Lbar;
  InitialLaw initial = GaussianState{Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Zero(1, 1)};

  int horizon() const { return static_cast<int>(stages.size()); }

  /// Throws std::invalid_argument naming the stage and field on a dimension
  /// or symmetry violation.
  void validate() const;

  /// Zero model with identity drift.
  static LQModel zeros(int d, int m, int horizon);
};

struct MeanVarianceParams {
  double gamma = 1.0;
  double b = 0.5;
  double sigma = 1.0;
  double delta = 1.0;
  int n = 2;
  double x0 = 0.0;

  void validate() const;
};

/// Wealth X_{k+1} = X_k + α_k (bΔ + σ√Δ ε_{k+1}) with cost (γ/2)Var(X_n) − E[X_n]:
/// B = 1, C = bΔ, H = σ√Δ, Q = γ/2, Q̄ = −γ/2, L̄ = −1, everything else 0.
LQModel mean_variance_model(const MeanVarianceParams& p);

/// Semidefiniteness and rank conditions guaranteeing convex, coercive stage
/// problems. Positivity requirements on the next-stage state weight use the
/// propagated Λ_{k+1} (resp. Γ_{k+1}) along the backward recursion; the
/// literal Q_{k+1} (resp. Q_{k+1} + Q̄_{k+1}) readings are reported alongside.
struct StageConditions {
  int stage = 0;
  bool c0 = false;
  bool c1 = false;
  bool c2 = false;
  bool c1_literal = false;
  bool c2_literal = false;
  std::string detail;
};

struct ConditionReport {
  bool terminal_c0 = false;
  std::vector<StageConditions> stages;

  bool passed() const;
  /// First failing condition with its stage, or empty when passed.
  std::string first_failure() const;
};

ConditionReport check_conditions(const LQModel& model);

struct RiccatiSolution {
  // k = 0..n
  std::vector<Eigen::MatrixXd> Lambda, Gamma;
  std::vector<Eigen::VectorXd> rho;
  std::vector<double> chi;
  // k = 0..n-1 (empty for the closed forms)
  std::vector<Eigen::MatrixXd> V, W, S, T, N;

  int horizon() const { return static_cast<int>(Lambda.size()) - 1; }
};

/// Backward recursion from Λ_n = Q, Γ_n = Q + Q̄, ρ_n = L + L̄, χ_n = 0.
/// Unless `force`, refuses models failing check_conditions (std::invalid_argument).
/// Throws NumericalError naming the stage if V_k or W_k is not positive definite.
RiccatiSolution solve_riccati(const LQModel& model, bool force = false);

/// Λ_k = (γ/2)(σ²/(σ²+b²Δ))^(n−k), Γ_k = 0, ρ_k = −1,
/// χ_k = −(1/(2γ))(((σ²+b²Δ)/σ²)^(n−k) − 1).
RiccatiSolution mean_variance_closed_form(const MeanVarianceParams& p);

/// v_k(μ) = Λ_k Var(μ) − μ̄ + χ_k for the closed form above.
double mean_variance_value(const MeanVarianceParams& p, int k, double mean, double variance);

/// Affine feedback a = K_k (x − x̄) + G_k x̄ + o_k.
struct AffineStage {
  Eigen::MatrixXd gain_state;  // m×d
  Eigen::MatrixXd gain_mean;   // m×d
  Eigen::VectorXd offset;      // m
};

struct AffinePolicy {
  std::vector<AffineStage> stages;

  int horizon() const { return static_cast<int>(stages.size()); }
  Eigen::VectorXd action(int k, const Eigen::VectorXd& x, const Eigen::VectorXd& mean) const;
  static AffinePolicy zeros(int d, int m, int horizon);
};

/// K_k = −V_k⁻¹S_kᵀ, G_k = −W_k⁻¹T_kᵀ, o_k = −½W_k⁻¹(C_k + C̄_k)ᵀρ_{k+1}.
AffinePolicy optimal_policy(const LQModel& model, const RiccatiSolution& sol);

/// α_k = feedback·X_k + initial_mean_gain·E[ξ] + constant, obtained by
/// substituting the mean flow E[X_{k+1}] = N_k E[X_k] + (C_k + C̄_k) o_k,
/// N_k = B_k + B̄_k − (C_k + C̄_k)W_k⁻¹T_kᵀ, into the feedback policy.
struct ExplicitControl {
  Eigen::MatrixXd feedback;           // m×d, on X_k
  Eigen::MatrixXd initial_mean_gain;  // m×d, on E[ξ]
  Eigen::VectorXd constant;           // m, accumulated offsets
};

std::vector<ExplicitControl> explicit_control_coefficients(const LQModel& model,
                                                           const RiccatiSolution& sol);

/// N_{k−1}···N_0 (identity at k = 0), k = 0..n.
std::vector<Eigen::MatrixXd> mean_propagators(const RiccatiSolution& sol);

/// w_k(μ) = Var(μ)(Λ_k) + μ̄ᵀΓ_kμ̄ + ρ_kᵀμ̄ + χ_k with Var(μ)(Λ) = tr(Λ Cov(μ)).
double value_at(const RiccatiSolution& sol, int k, const GaussianState& mu);
double value_at(const RiccatiSolution& sol, int k, const DiscreteMeasure& mu);

/// Gateaux gradient g_{k+1}(x, ᾶ) of the stage objective at the policy's
/// stage-k map, for a law with mean `mean`:
///   2ᾶ(x)ᵀV + 2āᵀ(W − V) + 2(x − μ̄)ᵀS + 2μ̄ᵀT + ρ_{k+1}ᵀ(C + C̄).
Eigen::VectorXd stationarity_residual(const LQModel& model, const RiccatiSolution& sol,
                                      const AffinePolicy& policy, int k,
                                      const Eigen::VectorXd& x, const Eigen::VectorXd& mean);

}  // namespace mfc
