#include "commands.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>

#include "mfc/dpp.hpp"
#include "mfc/errors.hpp"
#include "mfc/gaussian_mc.hpp"
#include "mfc/lq.hpp"
#include "mfc/model_config.hpp"

namespace mfc::cli {

void emit_json(const Json& j, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << j.dump(2) << '\n';
  } else {
    write_json_file(path, j);
  }
}

namespace {

std::ofstream open_csv(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << std::setprecision(17);
  return out;
}

void append_matrix_header(std::ofstream& out, const std::string& name, Eigen::Index rows,
                          Eigen::Index cols) {
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) out << ',' << name << '_' << r << c;
  }
}

void append_matrix(std::ofstream& out, const Eigen::MatrixXd& a) {
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    for (Eigen::Index c = 0; c < a.cols(); ++c) out << ',' << a(r, c);
  }
}

Closure parse_closure(const std::string& s) {
  if (s == "empirical") return Closure::Empirical;
  if (s == "oracle-law" || s == "oracle_law") return Closure::OracleLaw;
  throw ModelError("closure: expected 'empirical' or 'oracle-law', got '" + s + "'");
}

void write_stage_csv(const std::string& path, const SimulationResult& r) {
  auto out = open_csv(path);
  const Eigen::Index d = r.stages.front().mean.size();
  out << "stage";
  for (Eigen::Index i = 0; i < d; ++i) out << ",mean_" << i;
  for (Eigen::Index i = 0; i < d; ++i) out << ",var_" << i;
  out << '\n';
  for (std::size_t k = 0; k < r.stages.size(); ++k) {
    out << k;
    for (Eigen::Index i = 0; i < d; ++i) out << ',' << r.stages[k].mean[i];
    for (Eigen::Index i = 0; i < d; ++i) out << ',' << r.stages[k].cov(i, i);
    out << '\n';
  }
}

std::vector<std::vector<std::size_t>> finite_policies_from_json(const Json& j, int horizon,
                                                                std::size_t states,
                                                                std::size_t actions) {
  std::vector<std::vector<std::size_t>> out;
  if (j.contains("policies")) {
    out = j["policies"].get<std::vector<std::vector<std::size_t>>>();
  } else if (j.contains("policy_sequence")) {
    for (const auto& p : j["policy_sequence"]) {
      if (!p.contains("action_indices")) throw ModelError("policy_sequence: entry lacks action_indices");
      out.push_back(p["action_indices"].get<std::vector<std::size_t>>());
    }
  } else {
    throw ModelError("policy: expected 'policies' or 'policy_sequence'");
  }
  if (out.size() != static_cast<std::size_t>(horizon)) {
    throw ModelError("policy: expected " + std::to_string(horizon) + " stage maps");
  }
  for (std::size_t k = 0; k < out.size(); ++k) {
    if (out[k].size() != states) throw ModelError("policy[" + std::to_string(k) + "]: wrong length");
    for (std::size_t a : out[k]) {
      if (a >= actions) throw ModelError("policy[" + std::to_string(k) + "]: action index out of range");
    }
  }
  return out;
}

}  // namespace

int solve_finite(const SolveFiniteArgs& args) {
  const auto cfg = load_scenario(args.config);
  const auto scenario = cfg.finite();
  SolveOptions opts;
  opts.node_budget = args.node_budget.value_or(cfg.run.node_budget);
  const auto result = solve(scenario.model, scenario.initial, opts);

  Json j = to_json(result);
  j["name"] = scenario.name;
  emit_json(j, args.out.json_path);

  if (!args.out.csv_path.empty()) {
    auto out = open_csv(args.out.csv_path);
    const auto& states = scenario.model.states();
    out << "stage,state_index,state,weight\n";
    for (std::size_t k = 0; k < result.optimal_trajectory.size(); ++k) {
      const GridLaw law(states, result.optimal_trajectory[k]);
      for (std::size_t i = 0; i < states.size(); ++i) {
        out << k << ',' << i << ",\"" << format_point(states[i]) << "\"," << law.weight(i) << '\n';
      }
    }
  }
  return kOk;
}

int riccati(const RiccatiArgs& args) {
  const auto cfg = load_scenario(args.config);
  const LQModel model = cfg.lq();
  const auto report = check_conditions(model);
  if (!report.passed() && !args.force) {
    std::cerr << "mfc riccati: " << report.first_failure() << " (use --force to solve anyway)\n";
    return kNumerical;
  }
  const auto sol = solve_riccati(model, args.force);
  const auto policy = optimal_policy(model, sol);
  const auto controls = explicit_control_coefficients(model, sol);

  Json j;
  j["conditions"] = to_json(report);
  j["solution"] = to_json(sol);
  j["policy"] = to_json(policy);
  j["explicit_control"] = to_json(controls);
  j["value"] = number_to_json(value_at(sol, 0, moments(model.initial)));
  emit_json(j, args.out.json_path);

  if (!args.out.csv_path.empty()) {
    auto out = open_csv(args.out.csv_path);
    const int d = model.d;
    out << "stage";
    append_matrix_header(out, "Lambda", d, d);
    append_matrix_header(out, "Gamma", d, d);
    for (int i = 0; i < d; ++i) out << ",rho_" << i;
    out << ",chi\n";
    for (int k = 0; k <= sol.horizon(); ++k) {
      out << k;
      append_matrix(out, sol.Lambda[k]);
      append_matrix(out, sol.Gamma[k]);
      append_matrix(out, sol.rho[k]);
      out << ',' << sol.chi[k] << '\n';
    }
  }
  return kOk;
}

int meanvariance(const MeanVarianceArgs& args) {
  MeanVarianceParams p;
  p.gamma = args.gamma;
  p.b = args.b;
  p.sigma = args.sigma;
  p.n = args.n;
  p.x0 = args.x0;
  if (args.delta && args.horizon_time) throw ModelError("give either --delta or --T, not both");
  if (args.horizon_time) p.delta = *args.horizon_time / p.n;
  else if (args.delta) p.delta = *args.delta;
  try {
    p.validate();
  } catch (const std::invalid_argument& e) {
    throw ModelError(e.what());
  }

  const LQModel model = mean_variance_model(p);
  const auto closed = mean_variance_closed_form(p);
  const auto sol = solve_riccati(model);
  double diff = 0.0;
  for (int k = 0; k <= p.n; ++k) {
    diff = std::max({diff, std::abs(closed.Lambda[k](0, 0) - sol.Lambda[k](0, 0)),
                     std::abs(closed.Gamma[k](0, 0) - sol.Gamma[k](0, 0)),
                     std::abs(closed.rho[k][0] - sol.rho[k][0]), std::abs(closed.chi[k] - sol.chi[k])});
  }
  const auto policy = optimal_policy(model, sol);
  const auto controls = explicit_control_coefficients(model, sol);
  const double x0_term = (controls[0].initial_mean_gain * Eigen::VectorXd::Constant(1, p.x0))(0) +
                         controls[0].constant(0);

  Json j;
  j["params"] = to_json(p);
  j["value"] = mean_variance_value(p, 0, p.x0, 0.0);
  j["stage0"] = {{"gain_state", policy.stages[0].gain_state(0, 0)},
                 {"gain_mean", policy.stages[0].gain_mean(0, 0)},
                 {"offset", policy.stages[0].offset(0)},
                 {"feedback", controls[0].feedback(0, 0)},
                 {"constant", x0_term}};
  j["closed_form"] = to_json(closed);
  j["recursion_max_abs_diff"] = diff;
  j["policy"] = to_json(policy);
  j["explicit_control"] = to_json(controls);
  emit_json(j, args.out.json_path);
  return kOk;
}

int simulate(const SimulateArgs& args) {
  const auto cfg = load_scenario(args.config);
  SimulationOptions opts;
  opts.particles = args.particles.value_or(cfg.run.particles);
  opts.seed = args.seed;
  opts.closure = parse_closure(args.closure);
  if (opts.particles == 0) throw ModelError("particles: must be at least 1");

  Json j;
  SimulationResult result;
  double exact = std::numeric_limits<double>::quiet_NaN();
  if (cfg.kind == ScenarioConfig::Kind::Finite) {
    const auto scenario = cfg.finite();
    const auto& m = scenario.model;
    std::vector<std::vector<std::size_t>> policies;
    if (args.policy == "riccati" || args.policy == "optimal") {
      SolveOptions so;
      so.node_budget = cfg.run.node_budget;
      policies = solve(m, scenario.initial, so).optimal_policy_indices;
    } else if (args.policy == "zero") {
      policies.assign(m.horizon(), std::vector<std::size_t>(m.states().size(), 0));
    } else {
      policies = finite_policies_from_json(read_json_file(args.policy), m.horizon(),
                                           m.states().size(), m.actions().size());
    }
    result = mfc::simulate(m, scenario.initial, policies, opts);
    exact = policy_cost(m, scenario.initial, policies);
  } else {
    const LQModel model = cfg.lq();
    AffinePolicy policy;
    if (args.policy == "riccati" || args.policy == "optimal") {
      policy = optimal_policy(model, solve_riccati(model));
    } else if (args.policy == "zero") {
      policy = AffinePolicy::zeros(model.d, model.m, model.horizon());
    } else {
      const Json pj = read_json_file(args.policy);
      policy = affine_policy_from_json(pj.contains("policy") ? pj["policy"] : pj);
    }
    result = mfc::simulate(model, policy, opts);
    exact = exact_cost(model, policy);
  }
  j = to_json(result);
  j["closure"] = args.closure;
  j["exact"] = number_to_json(exact);
  j["z_score"] = number_to_json((result.estimate - exact) / result.std_error);
  emit_json(j, args.out.json_path);
  if (!args.out.csv_path.empty()) write_stage_csv(args.out.csv_path, result);
  return kOk;
}

}  // namespace mfc::cli
