#pragma once

// Randomized model generators shared by the unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <random>
#include <vector>

#include "mfc/lq.hpp"
#include "mfc/model.hpp"

namespace mfc::gen {

inline Eigen::MatrixXd gaussian_matrix(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c,
                                       double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Eigen::MatrixXd a(r, c);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = n(rng);
  return a;
}

inline std::vector<double> random_simplex(std::mt19937_64& rng, std::size_t n) {
  std::exponential_distribution<double> e(1.0);
  std::vector<double> w(n);
  double total = 0.0;
  for (auto& x : w) total += (x = e(rng));
  for (auto& x : w) x /= total;
  return w;
}

struct FiniteInstance {
  FiniteMFModel model;
  DiscreteMeasure mu0;
};

/// Finite model whose kernel and costs depend on μ (state weights and mean)
/// and λ (action mean) unless `interacting` is false. Kernel rows are
/// softmaxes of random logits, so they are strictly positive.
inline FiniteInstance random_finite_model(std::uint64_t seed, std::size_t S, std::size_t M, int n,
                                          bool interacting = true) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> xs(S), as(M);
  for (std::size_t i = 0; i < S; ++i) xs[i] = static_cast<double>(i) - 0.5 * (S - 1);
  for (std::size_t i = 0; i < M; ++i) as[i] = static_cast<double>(i) - 0.5 * (M - 1);

  struct Params {
    std::vector<double> logits;    // n × S × M × S
    std::vector<double> coupling;  // n × S × S, logit shift by μ(y)
    std::vector<double> tilt;      // n × 2, (μ̄, λ̄) tilt on s_j
    std::vector<double> cost;      // n × S × M
    std::vector<double> cost_mf;   // n × 3
    std::vector<double> terminal;  // S
    double terminal_mf;
  };
  auto p = std::make_shared<Params>();
  const double on = interacting ? 1.0 : 0.0;
  for (std::size_t i = 0; i < n * S * M * S; ++i) p->logits.push_back(g(rng));
  for (std::size_t i = 0; i < n * S * S; ++i) p->coupling.push_back(on * 2.0 * g(rng));
  for (int i = 0; i < 2 * n; ++i) p->tilt.push_back(on * g(rng));
  for (std::size_t i = 0; i < n * S * M; ++i) p->cost.push_back(g(rng));
  for (int i = 0; i < 3 * n; ++i) p->cost_mf.push_back(on * g(rng));
  for (std::size_t i = 0; i < S; ++i) p->terminal.push_back(g(rng));
  p->terminal_mf = on * std::abs(g(rng));

  auto kernel = [p, S, M, xs](int k, std::size_t x, std::size_t a, const Population& pop) {
    std::vector<double> r(S);
    const auto w = pop.state_weights();
    const double shift = p->tilt[2 * k] * pop.state_mean()[0] + p->tilt[2 * k + 1] * pop.action_mean()[0];
    for (std::size_t j = 0; j < S; ++j) {
      r[j] = p->logits[((k * S + x) * M + a) * S + j] + shift * xs[j];
      for (std::size_t y = 0; y < S; ++y) r[j] += p->coupling[(k * S + j) * S + y] * w[y];
    }
    const double top = *std::max_element(r.begin(), r.end());
    double total = 0.0;
    for (auto& v : r) total += (v = std::exp(v - top));
    for (auto& v : r) v /= total;
    return r;
  };
  auto stage = [p, S, M, xs](int k, std::size_t x, std::size_t a, const Population& pop) {
    const double m = pop.state_mean()[0];
    const double lam = pop.action_mean()[0];
    return p->cost[(k * S + x) * M + a] + p->cost_mf[3 * k] * m * m +
           p->cost_mf[3 * k + 1] * lam * xs[x] + p->cost_mf[3 * k + 2] * pop.state_weights()[x];
  };
  auto terminal = [p, xs](std::size_t x, const GridLaw& law) {
    const double dm = xs[x] - law.mean()[0];
    return p->terminal[x] + p->terminal_mf * dm * dm;
  };
  FiniteMFModel model(FiniteGrid::on_line(xs), FiniteGrid::on_line(as), n, kernel, stage, terminal);
  model.declare_no_interaction(!interacting);
  std::vector<Point> support;
  for (double x : xs) support.push_back(Point::Constant(1, x));
  return {std::move(model), DiscreteMeasure(std::move(support), random_simplex(rng, S))};
}

/// LQ model with R ≻ 0, R + R̄ ≻ 0 and the Q family PSD (the strengthened
/// convexity conditions), random dynamics and a Gaussian initial law.
inline LQModel random_lq_model(std::uint64_t seed, int d, int m, int n) {
  std::mt19937_64 rng(seed);
  LQModel model = LQModel::zeros(d, m, n);
  auto psd = [&](int k, double ridge) {
    const Eigen::MatrixXd a = gaussian_matrix(rng, k, k, 0.6);
    return Eigen::MatrixXd(a * a.transpose() + ridge * Eigen::MatrixXd::Identity(k, k));
  };
  for (auto& s : model.stages) {
    s.B = Eigen::MatrixXd::Identity(d, d) + gaussian_matrix(rng, d, d, 0.3);
    s.Bbar = gaussian_matrix(rng, d, d, 0.2);
    s.C = gaussian_matrix(rng, d, m, 0.6);
    s.Cbar = gaussian_matrix(rng, d, m, 0.3);
    s.D = gaussian_matrix(rng, d, d, 0.2);
    s.Dbar = gaussian_matrix(rng, d, d, 0.1);
    s.H = gaussian_matrix(rng, d, m, 0.3);
    s.Hbar = gaussian_matrix(rng, d, m, 0.1);
    s.Q = psd(d, 0.0);
    s.Qbar = psd(d, 0.0) - 0.5 * s.Q;
    s.R = psd(m, 0.3);
    s.Rbar = psd(m, 0.0) - 0.4 * s.R;
    s.L = gaussian_matrix(rng, d, 1, 0.5);
    s.Lbar = gaussian_matrix(rng, d, 1, 0.5);
  }
  model.Q = psd(d, 0.1);
  model.Qbar = psd(d, 0.0) - 0.5 * model.Q;
  model.L = gaussian_matrix(rng, d, 1, 0.5);
  model.Lbar = gaussian_matrix(rng, d, 1, 0.5);
  const Eigen::MatrixXd f = gaussian_matrix(rng, d, d, 0.5);
  model.initial = GaussianState{gaussian_matrix(rng, d, 1), f * f.transpose()};
  return model;
}

/// Random affine policy of matching shape.
inline AffinePolicy random_affine_policy(std::mt19937_64& rng, int d, int m, int n) {
  AffinePolicy p = AffinePolicy::zeros(d, m, n);
  for (auto& s : p.stages) {
    s.gain_state = gaussian_matrix(rng, m, d);
    s.gain_mean = gaussian_matrix(rng, m, d);
    s.offset = gaussian_matrix(rng, m, 1);
  }
  return p;
}

}  // namespace mfc::gen
