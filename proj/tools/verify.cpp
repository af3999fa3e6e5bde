#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "commands.hpp"
#include "mfc/dpp.hpp"
#include "mfc/errors.hpp"
#include "mfc/gaussian_mc.hpp"
#include "mfc/lq.hpp"
#include "mfc/model_config.hpp"

namespace mfc::cli {

namespace {

struct Row {
  std::string fixture;
  std::string check;
  bool pass;
  std::string detail;
};

std::string sci(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

class Table {
 public:
  explicit Table(std::string fixture) : fixture_(std::move(fixture)) {}

  void add(const std::string& check, bool pass, const std::string& detail) {
    rows_.push_back({fixture_, check, pass, detail});
  }
  // |value| <= tol
  void within(const std::string& check, double err, double tol) {
    add(check, std::isfinite(err) && err <= tol, "err " + sci(err) + " (tol " + sci(tol) + ")");
  }
  // Runs `body`, turning an exception into a failed row.
  void guard(const std::string& check, const std::function<void()>& body) {
    try {
      body();
    } catch (const std::exception& e) {
      add(check, false, std::string("threw: ") + e.what());
    }
  }
  std::vector<Row>& rows() { return rows_; }

 private:
  std::string fixture_;
  std::vector<Row> rows_;
};

void verify_finite(const ScenarioConfig& cfg, Table& t, const VerifyArgs& args) {
  const auto sc = cfg.finite();
  const auto& model = sc.model;
  const auto& mu0 = sc.initial;

  const auto report = validate(model);
  t.add("validate", report.ok(), report.ok() ? std::to_string(report.rows_checked) + " rows"
                                             : report.summary(1));
  SolveOptions so;
  so.node_budget = cfg.run.node_budget;
  const auto res = solve(model, mu0, so);

  t.guard("solve = brute force", [&] {
    t.within("solve = brute force", std::abs(res.v0 - brute_force_value(model, mu0)), 1e-10);
  });
  t.within("roll-forward = v0",
           std::abs(policy_cost(model, mu0, res.optimal_policy_indices) - res.v0), 1e-12);

  double dpp_err = 0.0;
  for (const auto& [key, node] : res.value_cache) {
    if (node.stage == model.horizon()) {
      dpp_err = std::max(dpp_err, std::abs(node.value - lifted_terminal_cost(model, node.measure)));
      continue;
    }
    const Population pop(model.actions(), GridLaw(model.states(), node.measure), node.argmin);
    const GridLaw child = pushforward(pop, model.kernel(), node.stage);
    const double rhs = lifted_stage_cost(model, node.stage, pop) + res.node(node.stage + 1, child).value;
    dpp_err = std::max(dpp_err, std::abs(node.value - rhs));
  }
  t.within("DPP consistency", dpp_err, 1e-12);

  const double shift = 0.75;
  t.within("terminal shift",
           std::abs(solve(model.with_terminal_shift(shift), mu0, so).v0 - res.v0 - shift), 1e-12);

  std::mt19937_64 rng(args.seed);
  std::uniform_int_distribution<std::size_t> pick(0, model.actions().size() - 1);
  double worst = std::numeric_limits<double>::infinity();
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::vector<std::size_t>> seq(model.horizon(),
                                              std::vector<std::size_t>(model.states().size()));
    for (auto& p : seq) {
      for (auto& a : p) a = pick(rng);
    }
    worst = std::min(worst, policy_cost(model, mu0, seq) - res.v0);
  }
  t.add("random policies >= v0", worst >= -1e-10, "min gap " + sci(worst));

  if (model.no_interaction()) {
    const auto fr = classical_factorization_check(model, mu0, so);
    t.within("classical factorization", fr.max_discrepancy, 1e-12);
  }
  if (model.first_order_components()) {
    t.guard("first order recursion", [&] {
      const auto fo = first_order_check(model, mu0, {}, so);
      t.within("first order recursion", fo.max_discrepancy, 1e-10);
    });
  }

  SimulationOptions opts;
  opts.particles = args.particles;
  opts.seed = args.seed;
  opts.closure = Closure::OracleLaw;
  const auto sim = mfc::simulate(model, mu0, res.optimal_policy_indices, opts);
  const double z = std::abs(sim.estimate - res.v0);
  t.add("monte carlo (oracle law)", z <= 4.0 * sim.std_error || z <= 1e-12,
        "|est - v0| = " + sci(z) + ", 4 se = " + sci(4.0 * sim.std_error));

  const auto back = solve_result_from_json(Json::parse(to_json(res).dump()));
  bool same = back.v0 == res.v0 && back.reachable_tree_size == res.reachable_tree_size &&
              back.optimal_policy_indices == res.optimal_policy_indices &&
              back.optimal_trajectory.size() == res.optimal_trajectory.size();
  for (std::size_t k = 0; same && k < back.optimal_trajectory.size(); ++k) {
    same = back.optimal_trajectory[k].weights() == res.optimal_trajectory[k].weights();
  }
  t.add("json round trip", same, "SolveResult");
}

void verify_lq(const ScenarioConfig& cfg, Table& t, const VerifyArgs& args) {
  const LQModel model = cfg.lq();
  const auto report = check_conditions(model);
  t.add("conditions (c0)-(c2)", report.passed(), report.passed() ? "all stages" : report.first_failure());
  if (!report.passed()) return;

  const auto sol = solve_riccati(model);
  const auto policy = optimal_policy(model, sol);
  const GaussianState xi = moments(model.initial);

  double psd = 0.0;
  for (int k = 0; k <= sol.horizon(); ++k) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> l(sol.Lambda[k]), g(sol.Gamma[k]);
    psd = std::min({psd, l.eigenvalues().minCoeff(), g.eigenvalues().minCoeff()});
  }
  t.add("Lambda, Gamma PSD", psd >= -1e-10, "min eigenvalue " + sci(psd));

  if (cfg.kind == ScenarioConfig::Kind::MeanVariance) {
    const auto closed = mean_variance_closed_form(cfg.mean_variance());
    double diff = 0.0;
    for (int k = 0; k <= sol.horizon(); ++k) {
      diff = std::max({diff, (closed.Lambda[k] - sol.Lambda[k]).cwiseAbs().maxCoeff(),
                       (closed.Gamma[k] - sol.Gamma[k]).cwiseAbs().maxCoeff(),
                       (closed.rho[k] - sol.rho[k]).cwiseAbs().maxCoeff(),
                       std::abs(closed.chi[k] - sol.chi[k])});
    }
    t.within("closed form", diff, 1e-12);
  }

  const double j_star = exact_cost(model, policy);
  t.within("J(a*) = w_0(xi)", std::abs(j_star - value_at(sol, 0, xi)), 1e-9);

  std::mt19937_64 rng(args.seed);
  std::normal_distribution<double> normal;
  auto random = [&](Eigen::Index r, Eigen::Index c) {
    Eigen::MatrixXd a(r, c);
    for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = normal(rng);
    return a;
  };

  double stat = 0.0;
  double dpp = 0.0;
  const auto traj = moment_trajectory(model, policy);
  for (int k = 0; k < model.horizon(); ++k) {
    for (int s = 0; s < 5; ++s) {
      const Eigen::VectorXd x = random(model.d, 1);
      stat = std::max(stat, stationarity_residual(model, sol, policy, k, x, traj[k].mean).cwiseAbs().maxCoeff());
      const Eigen::MatrixXd f = random(model.d, model.d);
      const GaussianState mu{random(model.d, 1), f * f.transpose()};
      const double lhs = value_at(sol, k, mu);
      const double rhs = expected_stage_cost(model, k, mu, policy) +
                         value_at(sol, k + 1, exact_moment_step(model, k, mu, policy));
      dpp = std::max(dpp, std::abs(lhs - rhs) / std::max(1.0, std::abs(lhs)));
    }
  }
  t.within("stationarity", stat, 1e-9);
  t.within("DPP one-step identity", dpp, 1e-9);

  double worst = std::numeric_limits<double>::infinity();
  bool convex = true;
  for (int trial = 0; trial < 50; ++trial) {
    AffinePolicy beta = AffinePolicy::zeros(model.d, model.m, model.horizon());
    for (auto& s : beta.stages) {
      s.gain_state = random(model.m, model.d);
      s.gain_mean = random(model.m, model.d);
      s.offset = random(model.m, 1);
    }
    auto shifted = [&](double eps) {
      AffinePolicy p = policy;
      for (int k = 0; k < p.horizon(); ++k) {
        p.stages[k].gain_state += eps * beta.stages[k].gain_state;
        p.stages[k].gain_mean += eps * beta.stages[k].gain_mean;
        p.stages[k].offset += eps * beta.stages[k].offset;
      }
      return exact_cost(model, p);
    };
    for (double eps : {1e-3, 1e-2}) {
      const double plus = shifted(eps);
      const double minus = shifted(-eps);
      worst = std::min({worst, plus - j_star, minus - j_star});
      convex = convex && plus + minus - 2.0 * j_star >= -1e-9;
    }
  }
  t.add("perturbations >= J(a*)", worst >= -1e-9 && convex, "min gap " + sci(worst));

  SimulationOptions opts;
  opts.particles = args.particles;
  opts.seed = cfg.run.seed.value_or(args.seed);
  const auto sim = mfc::simulate(model, policy, opts);
  const double err = std::abs(sim.estimate - j_star);
  t.add("monte carlo (empirical)", err <= 4.0 * sim.std_error || err <= 1e-12,
        "|est - J| = " + sci(err) + ", 4 se = " + sci(4.0 * sim.std_error));

  const auto back = riccati_from_json(Json::parse(to_json(sol).dump()));
  bool same = back.chi == sol.chi;
  for (int k = 0; same && k <= sol.horizon(); ++k) {
    same = back.Lambda[k] == sol.Lambda[k] && back.Gamma[k] == sol.Gamma[k] && back.rho[k] == sol.rho[k];
  }
  t.add("json round trip", same, "RiccatiSolution");
}

std::vector<std::string> default_fixtures() {
  std::vector<std::string> out;
  for (const char* dir : {"fixtures/finite", "fixtures/lq"}) {
    if (!std::filesystem::is_directory(dir)) continue;
    for (const auto& e : std::filesystem::directory_iterator(dir)) {
      if (e.path().extension() == ".json") out.push_back(e.path().string());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

int verify(const VerifyArgs& args) {
  auto configs = args.configs.empty() ? default_fixtures() : args.configs;
  if (configs.empty()) throw ModelError("verify: no fixtures given and none found under ./fixtures");

  std::vector<Row> rows;
  for (const auto& path : configs) {
    const std::string name = std::filesystem::path(path).stem().string();
    Table t(name);
    const auto cfg = load_scenario(path);
    t.guard("run", [&] {
      if (cfg.kind == ScenarioConfig::Kind::Finite) verify_finite(cfg, t, args);
      else verify_lq(cfg, t, args);
    });
    rows.insert(rows.end(), t.rows().begin(), t.rows().end());
  }

  std::size_t failed = 0;
  std::printf("%-24s %-28s %-6s %s\n", "fixture", "check", "result", "detail");
  for (const auto& r : rows) {
    std::printf("%-24s %-28s %-6s %s\n", r.fixture.c_str(), r.check.c_str(), r.pass ? "pass" : "FAIL",
                r.detail.c_str());
    failed += r.pass ? 0 : 1;
  }
  std::printf("%zu checks, %zu failed\n", rows.size(), failed);

  if (!args.json_path.empty()) {
    Json j = Json::array();
    for (const auto& r : rows) {
      j.push_back({{"fixture", r.fixture}, {"check", r.check}, {"pass", r.pass}, {"detail", r.detail}});
    }
    write_json_file(args.json_path, j);
  }
  return failed == 0 ? kOk : kCheckFailed;
}

}  // namespace mfc::cli
