#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "mfc/dpp.hpp"
#include "mfc/lq.hpp"
#include "mfc/model.hpp"

namespace mfc {

/// Law of X_{k+1} under affine feedback when X_k has moments `state`:
///   mean' = (B + B̄)x̄ + (C + C̄)ā
///   cov'  = (B + CK) P (B + CK)ᵀ + (D + HK) P (D + HK)ᵀ + s sᵀ,
///   s = (D + D̄)x̄ + (H + H̄)ā,
/// with K the state gain and ā = G x̄ + o the mean action. Only the first two
/// moments of X_k enter, so the step is exact for any law with those moments.
GaussianState exact_moment_step(const LQModel& model, int k, const GaussianState& state,
                                const AffinePolicy& policy);

/// Moments of X_0..X_n.
std::vector<GaussianState> moment_trajectory(const LQModel& model, const AffinePolicy& policy);

/// E[running cost at stage k] from the moments of X_k.
double expected_stage_cost(const LQModel& model, int k, const GaussianState& state,
                           const AffinePolicy& policy);
double expected_terminal_cost(const LQModel& model, const GaussianState& state);

/// J(α) in closed form from the propagated moments.
double exact_cost(const LQModel& model, const AffinePolicy& policy);

/// Where simulate takes the law arguments of the dynamics and costs from.
enum class Closure {
  Empirical,  // the cloud's empirical measure: the N-player system
  OracleLaw,  // the exact law (Gaussian moments, or the finite measure flow)
};

struct SimulationOptions {
  std::size_t particles = 10'000;
  std::uint64_t seed = 0;
  Closure closure = Closure::Empirical;
  bool keep_particles = false;
  std::size_t threads = 0;  // 0: thread_count()
};

/// Snapshot of the particle system at one stage.
struct ParticleCloud {
  int stage = 0;
  std::uint64_t seed = 0;
  Eigen::MatrixXd particles;  // d × N

  DiscreteMeasure empirical_measure() const;
};

struct StageStatistics {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;  // population (1/N) covariance of the cloud
};

struct SimulationResult {
  double estimate = 0.0;
  double std_error = 0.0;
  std::size_t particles = 0;
  std::uint64_t seed = 0;
  std::vector<StageStatistics> stages;  // k = 0..n
  std::vector<ParticleCloud> clouds;    // only with keep_particles
};

/// N-particle simulation of the LQ McKean-Vlasov system under an affine
/// feedback. Particle i at stage k draws its noise from the counter-based
/// stream (seed, i, k); the cost estimate is the pairwise-summed mean of
/// per-particle realized costs with the unbiased standard error (NaN for N = 1).
SimulationResult simulate(const LQModel& model, const AffinePolicy& policy,
                          const SimulationOptions& options);

/// Finite-model counterpart: particles carry state indices, act by the
/// tabular maps (action index per state, one map per stage) and draw their
/// next state from the kernel row by inversion.
SimulationResult simulate(const FiniteMFModel& model, const DiscreteMeasure& mu0,
                          std::span<const std::vector<std::size_t>> policies,
                          const SimulationOptions& options);

}  // namespace mfc
