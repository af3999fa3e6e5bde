#include <benchmark/benchmark.h>

#include <cmath>
#include <random>

#include "mfc/dpp.hpp"
#include "mfc/gaussian_mc.hpp"
#include "mfc/lq.hpp"

namespace {

mfc::MeanVarianceParams wealth(int n) {
  mfc::MeanVarianceParams p;
  p.n = n;
  p.delta = 1.0 / n;
  p.x0 = 1.0;
  return p;
}

// S-state walk on a line; the drift is pulled toward the population mean.
mfc::FiniteMFModel crowd_walk(std::size_t S, int n) {
  std::vector<double> xs(S);
  for (std::size_t i = 0; i < S; ++i) xs[i] = static_cast<double>(i);
  auto row = [S](int, std::size_t x, std::size_t a, const mfc::Population& pop) {
    std::vector<double> r(S, 0.1 / S);
    const double m = pop.state_mean()[0];
    const std::size_t step = a == 0 ? x : (m > x ? std::min(x + 1, S - 1) : (x == 0 ? 0 : x - 1));
    r[step] += 0.9;
    return r;
  };
  auto cost = [xs](int, std::size_t x, std::size_t a, const mfc::Population& pop) {
    const double d = xs[x] - pop.state_mean()[0];
    return d * d + 0.2 * a + 0.1 * pop.action_mean()[0];
  };
  auto terminal = [xs](std::size_t x, const mfc::GridLaw& law) {
    const double d = xs[x] - law.mean()[0];
    return d * d;
  };
  return mfc::FiniteMFModel(mfc::FiniteGrid::on_line(xs), mfc::FiniteGrid::on_line({0.0, 1.0}), n, row,
                            cost, terminal);
}

}  // namespace

static void BM_RiccatiMeanVariance(benchmark::State& state) {
  const auto model = mfc::mean_variance_model(wealth(static_cast<int>(state.range(0))));
  for (auto _ : state) benchmark::DoNotOptimize(mfc::solve_riccati(model));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_RiccatiMeanVariance)->RangeMultiplier(10)->Range(10, 10'000)->Complexity(benchmark::oN);

static void BM_RiccatiMultivariate(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  mfc::LQModel model = mfc::LQModel::zeros(d, d, 50);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g(0.0, 0.2);
  for (auto& s : model.stages) {
    s.C = Eigen::MatrixXd::Identity(d, d);
    s.R = Eigen::MatrixXd::Identity(d, d);
    s.Q = Eigen::MatrixXd::Identity(d, d);
    for (Eigen::Index i = 0; i < s.Bbar.size(); ++i) s.Bbar.data()[i] = g(rng);
  }
  model.Q = Eigen::MatrixXd::Identity(d, d);
  model.initial = mfc::GaussianState{Eigen::VectorXd::Zero(d), Eigen::MatrixXd::Identity(d, d)};
  for (auto _ : state) benchmark::DoNotOptimize(mfc::solve_riccati(model));
}
BENCHMARK(BM_RiccatiMultivariate)->Arg(2)->Arg(8)->Arg(32);

static void BM_FiniteSolve(benchmark::State& state) {
  const auto model = crowd_walk(static_cast<std::size_t>(state.range(0)), static_cast<int>(state.range(1)));
  std::vector<double> w(model.states().size(), 1.0 / model.states().size());
  const mfc::DiscreteMeasure mu0(model.states().points(), w);
  for (auto _ : state) benchmark::DoNotOptimize(mfc::solve(model, mu0));
}
BENCHMARK(BM_FiniteSolve)->Args({3, 3})->Args({3, 4})->Args({4, 3})->Unit(benchmark::kMillisecond);

static void BM_BruteForce(benchmark::State& state) {
  const auto model = crowd_walk(3, static_cast<int>(state.range(0)));
  const mfc::DiscreteMeasure mu0(model.states().points(), {0.2, 0.5, 0.3});
  for (auto _ : state) benchmark::DoNotOptimize(mfc::brute_force_value(model, mu0));
}
BENCHMARK(BM_BruteForce)->Arg(2)->Arg(3)->Unit(benchmark::kMillisecond);

static void BM_SimulateMeanVariance(benchmark::State& state) {
  const auto model = mfc::mean_variance_model(wealth(10));
  const auto policy = mfc::optimal_policy(model, mfc::solve_riccati(model));
  mfc::SimulationOptions opts;
  opts.particles = static_cast<std::size_t>(state.range(0));
  opts.seed = 7;
  for (auto _ : state) benchmark::DoNotOptimize(mfc::simulate(model, policy, opts));
  state.SetItemsProcessed(state.iterations() * state.range(0) * 10);
}
BENCHMARK(BM_SimulateMeanVariance)->RangeMultiplier(10)->Range(1'000, 100'000)->Unit(benchmark::kMillisecond);

static void BM_ExactCost(benchmark::State& state) {
  const auto model = mfc::mean_variance_model(wealth(static_cast<int>(state.range(0))));
  const auto policy = mfc::optimal_policy(model, mfc::solve_riccati(model));
  for (auto _ : state) benchmark::DoNotOptimize(mfc::exact_cost(model, policy));
}
BENCHMARK(BM_ExactCost)->Arg(10)->Arg(1000);
BENCHMARK_MAIN();
