#include "mfc/gaussian_mc.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "mfc/parallel.hpp"
#include "mfc/philox.hpp"

namespace mfc {

namespace {

void check_policy(const LQModel& model, const AffinePolicy& policy) {
  if (policy.horizon() != model.horizon()) {
    throw std::invalid_argument("policy horizon does not match the model");
  }
  for (const auto& s : policy.stages) {
    if (s.gain_state.rows() != model.m || s.gain_state.cols() != model.d ||
        s.gain_mean.rows() != model.m || s.gain_mean.cols() != model.d ||
        s.offset.size() != model.m) {
      throw std::invalid_argument("affine policy dimensions do not match the model");
    }
  }
}

void check_state(const LQModel& model, const GaussianState& state) {
  if (state.mean.size() != model.d || state.cov.rows() != model.d || state.cov.cols() != model.d) {
    throw std::invalid_argument("state moments do not match the model dimension");
  }
}

}  // namespace

GaussianState exact_moment_step(const LQModel& model, int k, const GaussianState& state,
                                const AffinePolicy& policy) {
  check_policy(model, policy);
  check_state(model, state);
  if (k < 0 || k >= model.horizon()) throw std::out_of_range("stage outside [0, n)");
  const auto& s = model.stages[k];
  const auto& a = policy.stages[k];
  const Eigen::VectorXd a_bar = a.gain_mean * state.mean + a.offset;
  const Eigen::MatrixXd drift = s.B + s.C * a.gain_state;
  const Eigen::MatrixXd vol = s.D + s.H * a.gain_state;
  const Eigen::VectorXd vol_mean = (s.D + s.Dbar) * state.mean + (s.H + s.Hbar) * a_bar;

  GaussianState next;
  next.mean = (s.B + s.Bbar) * state.mean + (s.C + s.Cbar) * a_bar;
  next.cov = drift * state.cov * drift.transpose() + vol * state.cov * vol.transpose() +
             vol_mean * vol_mean.transpose();
  next.cov = 0.5 * (next.cov + next.cov.transpose());
  return next;
}

std::vector<GaussianState> moment_trajectory(const LQModel& model, const AffinePolicy& policy) {
  model.validate();
  std::vector<GaussianState> out{moments(model.initial)};
  for (int k = 0; k < model.horizon(); ++k) {
    out.push_back(exact_moment_step(model, k, out.back(), policy));
  }
  return out;
}

double expected_stage_cost(const LQModel& model, int k, const GaussianState& state,
                           const AffinePolicy& policy) {
  const auto& s = model.stages.at(k);
  const auto& a = policy.stages.at(k);
  const Eigen::VectorXd& m = state.mean;
  const Eigen::VectorXd a_bar = a.gain_mean * m + a.offset;
  const Eigen::MatrixXd action_cov = a.gain_state * state.cov * a.gain_state.transpose();
  return (s.Q * state.cov).trace() + m.dot((s.Q + s.Qbar) * m) + (s.L + s.Lbar).dot(m) +
         (s.R * action_cov).trace() + a_bar.dot((s.R + s.Rbar) * a_bar);
}

double expected_terminal_cost(const LQModel& model, const GaussianState& state) {
  const Eigen::VectorXd& m = state.mean;
  return (model.Q * state.cov).trace() + m.dot((model.Q + model.Qbar) * m) +
         (model.L + model.Lbar).dot(m);
}

double exact_cost(const LQModel& model, const AffinePolicy& policy) {
  check_policy(model, policy);
  const auto traj = moment_trajectory(model, policy);
  double total = 0.0;
  for (int k = 0; k < model.horizon(); ++k) total += expected_stage_cost(model, k, traj[k], policy);
  return total + expected_terminal_cost(model, traj.back());
}

DiscreteMeasure ParticleCloud::empirical_measure() const {
  std::vector<Point> pts;
  pts.reserve(particles.cols());
  for (Eigen::Index i = 0; i < particles.cols(); ++i) pts.push_back(particles.col(i));
  return DiscreteMeasure::empirical(std::move(pts));
}

namespace {

// Pairwise mean of each row.
Eigen::VectorXd row_means(const Eigen::MatrixXd& x) {
  Eigen::VectorXd m(x.rows());
  std::vector<double> buf(x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    for (Eigen::Index i = 0; i < x.cols(); ++i) buf[i] = x(r, i);
    m[r] = pairwise_sum(buf) / static_cast<double>(x.cols());
  }
  return m;
}

StageStatistics cloud_statistics(const Eigen::MatrixXd& x) {
  StageStatistics st;
  st.mean = row_means(x);
  const Eigen::Index d = x.rows();
  st.cov = Eigen::MatrixXd::Zero(d, d);
  std::vector<double> buf(x.cols());
  for (Eigen::Index r = 0; r < d; ++r) {
    for (Eigen::Index c = r; c < d; ++c) {
      for (Eigen::Index i = 0; i < x.cols(); ++i) {
        buf[i] = (x(r, i) - st.mean[r]) * (x(c, i) - st.mean[c]);
      }
      st.cov(r, c) = st.cov(c, r) = pairwise_sum(buf) / static_cast<double>(x.cols());
    }
  }
  return st;
}

void finish_estimate(SimulationResult& out, const std::vector<double>& costs) {
  const double n = static_cast<double>(costs.size());
  out.estimate = pairwise_sum(costs) / n;
  if (costs.size() < 2) {
    out.std_error = std::numeric_limits<double>::quiet_NaN();
    return;
  }
  std::vector<double> sq(costs.size());
  for (std::size_t i = 0; i < costs.size(); ++i) {
    const double c = costs[i] - out.estimate;
    sq[i] = c * c;
  }
  out.std_error = std::sqrt(pairwise_sum(sq) / (n - 1.0) / n);
}

Eigen::MatrixXd sample_initial(const InitialLaw& law, int d, std::size_t N, std::uint64_t seed,
                               std::size_t workers) {
  Eigen::MatrixXd x(d, static_cast<Eigen::Index>(N));
  if (const auto* g = std::get_if<GaussianState>(&law)) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (g->cov + g->cov.transpose()));
    const Eigen::VectorXd root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    const Eigen::MatrixXd factor = es.eigenvectors() * root.asDiagonal();
    parallel_for(
        N,
        [&](std::size_t begin, std::size_t end, std::size_t) {
          Eigen::VectorXd z(d);
          for (std::size_t i = begin; i < end; ++i) {
            const StreamAddress stream(seed, i, 0, StreamAddress::kInitial);
            for (int j = 0; j < d; j += 2) {
              const auto pair = stream.normal_pair(static_cast<std::uint32_t>(j / 2));
              z[j] = pair[0];
              if (j + 1 < d) z[j + 1] = pair[1];
            }
            x.col(static_cast<Eigen::Index>(i)) = g->mean + factor * z;
          }
        },
        workers);
    return x;
  }
  const auto& mu = std::get<DiscreteMeasure>(law);
  parallel_for(
      N,
      [&](std::size_t begin, std::size_t end, std::size_t) {
        for (std::size_t i = begin; i < end; ++i) {
          const double u = StreamAddress(seed, i, 0, StreamAddress::kInitial).uniform();
          std::size_t j = 0;
          double acc = mu.weight(0);
          while (u >= acc && j + 1 < mu.size()) acc += mu.weight(++j);
          x.col(static_cast<Eigen::Index>(i)) = mu.point(j);
        }
      },
      workers);
  return x;
}

}  // namespace

SimulationResult simulate(const LQModel& model, const AffinePolicy& policy,
                          const SimulationOptions& options) {
  model.validate();
  check_policy(model, policy);
  if (options.particles == 0) throw std::invalid_argument("simulation needs at least one particle");
  const std::size_t N = options.particles;
  const int d = model.d;
  const int m = model.m;
  const std::size_t workers = options.threads ? options.threads : thread_count();

  std::vector<GaussianState> oracle;
  if (options.closure == Closure::OracleLaw) oracle = moment_trajectory(model, policy);

  SimulationResult out;
  out.particles = N;
  out.seed = options.seed;
  Eigen::MatrixXd x = sample_initial(model.initial, d, N, options.seed, workers);
  Eigen::MatrixXd next(d, static_cast<Eigen::Index>(N));
  Eigen::MatrixXd actions(m, static_cast<Eigen::Index>(N));
  std::vector<double> costs(N, 0.0);

  auto snapshot = [&](int k) {
    out.stages.push_back(cloud_statistics(x));
    if (options.keep_particles) out.clouds.push_back({k, options.seed, x});
  };

  for (int k = 0; k < model.horizon(); ++k) {
    snapshot(k);
    const auto& s = model.stages[k];
    const auto& a = policy.stages[k];
    const Eigen::VectorXd x_bar =
        options.closure == Closure::OracleLaw ? oracle[k].mean : out.stages.back().mean;

    parallel_for(
        N,
        [&](std::size_t begin, std::size_t end, std::size_t) {
          for (std::size_t i = begin; i < end; ++i) {
            const auto col = static_cast<Eigen::Index>(i);
            actions.col(col) = a.gain_state * (x.col(col) - x_bar) + a.gain_mean * x_bar + a.offset;
          }
        },
        workers);
    const Eigen::VectorXd a_bar = options.closure == Closure::OracleLaw
                                      ? Eigen::VectorXd(a.gain_mean * x_bar + a.offset)
                                      : row_means(actions);

    const double shared = x_bar.dot(s.Qbar * x_bar) + s.Lbar.dot(x_bar) + a_bar.dot(s.Rbar * a_bar);
    const Eigen::VectorXd drift_shared = s.Bbar * x_bar + s.Cbar * a_bar;
    const Eigen::VectorXd vol_shared = s.Dbar * x_bar + s.Hbar * a_bar;
    parallel_for(
        N,
        [&](std::size_t begin, std::size_t end, std::size_t) {
          for (std::size_t i = begin; i < end; ++i) {
            const auto col = static_cast<Eigen::Index>(i);
            const Eigen::VectorXd xi = x.col(col);
            const Eigen::VectorXd ai = actions.col(col);
            costs[i] += xi.dot(s.Q * xi) + s.L.dot(xi) + ai.dot(s.R * ai) + shared;
            const double eps =
                StreamAddress(options.seed, i, static_cast<std::uint32_t>(k), StreamAddress::kDynamics)
                    .normal_pair()[0];
            next.col(col) = s.B * xi + s.C * ai + drift_shared + (s.D * xi + s.H * ai + vol_shared) * eps;
          }
        },
        workers);
    x.swap(next);
  }
  snapshot(model.horizon());
  const Eigen::VectorXd x_bar = options.closure == Closure::OracleLaw ? oracle.back().mean
                                                                      : out.stages.back().mean;
  const double shared = x_bar.dot(model.Qbar * x_bar) + model.Lbar.dot(x_bar);
  parallel_for(
      N,
      [&](std::size_t begin, std::size_t end, std::size_t) {
        for (std::size_t i = begin; i < end; ++i) {
          const Eigen::VectorXd xi = x.col(static_cast<Eigen::Index>(i));
          costs[i] += xi.dot(model.Q * xi) + model.L.dot(xi) + shared;
        }
      },
      workers);
  finish_estimate(out, costs);
  return out;
}

SimulationResult simulate(const FiniteMFModel& model, const DiscreteMeasure& mu0,
                          std::span<const std::vector<std::size_t>> policies,
                          const SimulationOptions& options) {
  if (options.particles == 0) throw std::invalid_argument("simulation needs at least one particle");
  if (policies.size() != static_cast<std::size_t>(model.horizon())) {
    throw std::invalid_argument("policy sequence length does not match horizon");
  }
  const auto& states = model.states();
  const std::size_t S = states.size();
  const std::size_t N = options.particles;
  const std::size_t workers = options.threads ? options.threads : thread_count();

  GridLaw oracle(states, mu0);
  std::vector<std::size_t> idx(N);
  {
    const Eigen::MatrixXd start = sample_initial(InitialLaw{mu0}, states.dimension(), N,
                                                 options.seed, workers);
    for (std::size_t i = 0; i < N; ++i) idx[i] = *states.index_of(start.col(static_cast<Eigen::Index>(i)));
  }

  SimulationResult out;
  out.particles = N;
  out.seed = options.seed;
  std::vector<double> costs(N, 0.0);

  auto positions = [&]() {
    Eigen::MatrixXd x(states.dimension(), static_cast<Eigen::Index>(N));
    for (std::size_t i = 0; i < N; ++i) x.col(static_cast<Eigen::Index>(i)) = states[idx[i]];
    return x;
  };
  auto empirical = [&]() {
    std::vector<double> counts(S, 0.0);
    for (std::size_t s : idx) counts[s] += 1.0;
    for (auto& c : counts) c /= static_cast<double>(N);
    return GridLaw(states, std::span<const double>(counts));
  };
  auto snapshot = [&](int k) {
    const Eigen::MatrixXd x = positions();
    out.stages.push_back(cloud_statistics(x));
    if (options.keep_particles) out.clouds.push_back({k, options.seed, x});
  };

  for (int k = 0; k < model.horizon(); ++k) {
    snapshot(k);
    const GridLaw law = options.closure == Closure::OracleLaw ? oracle : empirical();
    const Population pop(model.actions(), law, policies[k]);
    std::vector<std::vector<double>> cdf(S);
    std::vector<double> stage_cost(S);
    for (std::size_t x = 0; x < S; ++x) {
      auto row = model.kernel().row(k, x, pop.action_of(x), pop);
      for (std::size_t j = 1; j < S; ++j) row[j] += row[j - 1];
      cdf[x] = std::move(row);
      stage_cost[x] = model.stage_cost(k, x, pop.action_of(x), pop);
    }
    parallel_for(
        N,
        [&](std::size_t begin, std::size_t end, std::size_t) {
          for (std::size_t i = begin; i < end; ++i) {
            const std::size_t x = idx[i];
            costs[i] += stage_cost[x];
            const double u =
                StreamAddress(options.seed, i, static_cast<std::uint32_t>(k), StreamAddress::kDynamics)
                    .uniform() *
                cdf[x].back();
            std::size_t j = 0;
            while (j + 1 < S && u >= cdf[x][j]) ++j;
            idx[i] = j;
          }
        },
        workers);
    if (options.closure == Closure::OracleLaw) oracle = pushforward(pop, model.kernel(), k);
  }
  snapshot(model.horizon());
  const GridLaw terminal = options.closure == Closure::OracleLaw ? oracle : empirical();
  std::vector<double> terminal_cost(S);
  for (std::size_t x = 0; x < S; ++x) terminal_cost[x] = model.terminal_cost(x, terminal);
  for (std::size_t i = 0; i < N; ++i) costs[i] += terminal_cost[idx[i]];
  finish_estimate(out, costs);
  return out;
}

}  // namespace mfc
