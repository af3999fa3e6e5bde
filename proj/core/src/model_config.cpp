#include "mfc/model_config.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>

#include "mfc/errors.hpp"

namespace mfc {

namespace {

std::string sub(const std::string& field, const std::string& key) { return field + "." + key; }
std::string at(const std::string& field, std::size_t i) {
  return field + "[" + std::to_string(i) + "]";
}

double param(const Json& j, const char* key, const std::string& field, double fallback) {
  auto it = j.find(key);
  if (it == j.end()) return fallback;
  if (!it->is_number()) throw ModelError(sub(field, key) + ": expected a number");
  return it->get<double>();
}

const Json& need(const Json& j, const char* key, const std::string& field) {
  auto it = j.find(key);
  if (it == j.end()) throw ModelError(sub(field, key) + ": missing");
  return *it;
}

std::string type_of(const Json& j, const std::string& field) {
  if (!j.is_object()) throw ModelError(field + ": expected an object with a \"type\" tag");
  auto it = j.find("type");
  if (it == j.end() || !it->is_string()) throw ModelError(sub(field, "type") + ": missing");
  return it->get<std::string>();
}

// Nested numeric array with the given shape, flattened row-major.
std::vector<double> tensor(const Json& j, const std::string& field,
                           const std::vector<std::size_t>& shape) {
  std::vector<double> out;
  auto walk = [&](auto&& self, const Json& node, std::size_t depth, const std::string& f) -> void {
    if (depth == shape.size()) {
      if (!node.is_number()) throw ModelError(f + ": expected a number");
      out.push_back(node.get<double>());
      return;
    }
    if (!node.is_array() || node.size() != shape[depth]) {
      throw ModelError(f + ": expected an array of length " + std::to_string(shape[depth]));
    }
    for (std::size_t i = 0; i < node.size(); ++i) self(self, node[i], depth + 1, at(f, i));
  };
  walk(walk, j, 0, field);
  return out;
}

FiniteGrid grid_from_json(const Json& j, const std::string& field) {
  if (!j.is_array() || j.empty()) throw ModelError(field + ": expected a nonempty array");
  std::vector<Point> pts;
  for (std::size_t i = 0; i < j.size(); ++i) pts.push_back(point_from_json(j[i], at(field, i)));
  try {
    return FiniteGrid(std::move(pts));
  } catch (const std::invalid_argument& e) {
    throw ModelError(field + ": " + e.what());
  }
}

// Per-stage list: one object shared by all stages, or exactly n objects.
std::vector<Json> per_stage(const Json& j, const std::string& field, int n) {
  if (j.is_object()) return std::vector<Json>(n, j);
  if (!j.is_array()) throw ModelError(field + ": expected an object or an array of n objects");
  if (j.size() != static_cast<std::size_t>(n)) {
    throw ModelError(field + ": expected exactly horizon = " + std::to_string(n) +
                     " entries, got " + std::to_string(j.size()));
  }
  return {j.begin(), j.end()};
}

void require_scalar(const FiniteGrid& g, const std::string& field, const std::string& what) {
  if (g.dimension() != 1) throw ModelError(field + ": family needs scalar " + what);
}

using RowFn = std::function<std::vector<double>(std::size_t x, std::size_t a, const Population&)>;
using TildeRowFn =
    std::function<std::vector<double>(std::size_t x, std::size_t y, std::size_t a, std::size_t b)>;
using CostFn = std::function<double(std::size_t x, std::size_t a, const Population&)>;
using TildeCostFn = std::function<double(std::size_t x, std::size_t y, std::size_t a, std::size_t b)>;
using TermFn = std::function<double(std::size_t x, const GridLaw&)>;
using TildeTermFn = std::function<double(std::size_t x, std::size_t y)>;

struct KernelFamily {
  RowFn row;
  TildeRowFn tilde;  // set only for the first_order tag
  bool interacts = false;
};

struct CostFamily {
  CostFn cost;
  TildeCostFn tilde;  // set when the cost is linear in μ
  bool interacts = false;
};

struct TermFamily {
  TermFn cost;
  TildeTermFn tilde;
  bool interacts = false;
};

KernelFamily kernel_family(const Json& j, const std::string& field, const FiniteGrid& states,
                           const FiniteGrid& actions) {
  const std::string type = type_of(j, field);
  const std::size_t S = states.size();
  const std::size_t M = actions.size();
  KernelFamily fam;

  if (type == "identity") {
    fam.row = [S](std::size_t x, std::size_t, const Population&) {
      std::vector<double> r(S, 0.0);
      r[x] = 1.0;
      return r;
    };
    return fam;
  }

  if (type == "table") {
    auto rows = std::make_shared<std::vector<double>>(tensor(need(j, "rows", field), sub(field, "rows"), {S, M, S}));
    fam.row = [rows, S, M](std::size_t x, std::size_t a, const Population&) {
      const auto* p = rows->data() + (x * M + a) * S;
      return std::vector<double>(p, p + S);
    };
    return fam;
  }

  if (type == "mean_reverting") {
    require_scalar(states, field, "states");
    require_scalar(actions, field, "actions");
    const double theta = param(j, "theta", field, 0.0);
    const double kappa = param(j, "kappa", field, 0.0);
    const double eta = param(j, "eta", field, 0.0);
    const double noise = param(j, "noise", field, 0.0);
    if (noise < 0.0 || noise > 1.0) throw ModelError(sub(field, "noise") + ": must lie in [0, 1]");
    std::vector<std::size_t> order(S);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t i, std::size_t k) { return states.scalar(i) < states.scalar(k); });
    std::vector<double> xs(S);
    for (std::size_t i = 0; i < S; ++i) xs[i] = states.scalar(order[i]);
    std::vector<double> as(M);
    for (std::size_t i = 0; i < M; ++i) as[i] = actions.scalar(i);
    std::vector<double> own(S);
    for (std::size_t i = 0; i < S; ++i) own[i] = states.scalar(i);
    fam.interacts = theta != 0.0 || eta != 0.0;
    fam.row = [=](std::size_t x, std::size_t a, const Population& pop) {
      double t = own[x] + theta * (pop.state_mean()[0] - own[x]) + kappa * as[a] +
                 eta * pop.action_mean()[0];
      t = std::clamp(t, xs.front(), xs.back());
      std::vector<double> r(S, noise / static_cast<double>(S));
      if (S == 1) {
        r[0] = 1.0;
        return r;
      }
      std::size_t hi = static_cast<std::size_t>(std::upper_bound(xs.begin(), xs.end(), t) - xs.begin());
      hi = std::clamp<std::size_t>(hi, 1, S - 1);
      const std::size_t lo = hi - 1;
      const double share = (xs[hi] - t) / (xs[hi] - xs[lo]);
      r[order[lo]] += (1.0 - noise) * share;
      r[order[hi]] += (1.0 - noise) * (1.0 - share);
      return r;
    };
    return fam;
  }

  if (type == "softmax") {
    require_scalar(states, field, "states");
    require_scalar(actions, field, "actions");
    std::vector<double> base(S * M * S, 0.0);
    if (j.contains("base")) base = tensor(j["base"], sub(field, "base"), {S, M, S});
    const double b_mu = param(j, "beta_mu", field, 0.0);
    const double b_lambda = param(j, "beta_lambda", field, 0.0);
    const double b_action = param(j, "beta_action", field, 0.0);
    const double b_dist = param(j, "beta_distance", field, 0.0);
    std::vector<double> xs(S), as(M);
    for (std::size_t i = 0; i < S; ++i) xs[i] = states.scalar(i);
    for (std::size_t i = 0; i < M; ++i) as[i] = actions.scalar(i);
    fam.interacts = b_mu != 0.0 || b_lambda != 0.0;
    fam.row = [=](std::size_t x, std::size_t a, const Population& pop) {
      const double tilt = b_mu * pop.state_mean()[0] + b_lambda * pop.action_mean()[0] + b_action * as[a];
      std::vector<double> r(S);
      for (std::size_t j2 = 0; j2 < S; ++j2) {
        const double dx = xs[j2] - xs[x];
        r[j2] = base[(x * M + a) * S + j2] + tilt * xs[j2] - b_dist * dx * dx;
      }
      const double top = *std::max_element(r.begin(), r.end());
      double total = 0.0;
      for (auto& v : r) total += (v = std::exp(v - top));
      for (auto& v : r) v /= total;
      return r;
    };
    return fam;
  }

  if (type == "first_order") {
    auto t = std::make_shared<std::vector<double>>(
        tensor(need(j, "tensor", field), sub(field, "tensor"), {S, S, M, M, S}));
    fam.interacts = true;
    fam.tilde = [t, S, M](std::size_t x, std::size_t y, std::size_t a, std::size_t b) {
      const auto* p = t->data() + (((x * S + y) * M + a) * M + b) * S;
      return std::vector<double>(p, p + S);
    };
    auto tilde = fam.tilde;
    fam.row = [tilde, S](std::size_t x, std::size_t a, const Population& pop) {
      std::vector<double> r(S, 0.0);
      const auto w = pop.state_weights();
      for (std::size_t y = 0; y < S; ++y) {
        if (w[y] == 0.0) continue;
        const auto p = tilde(x, y, a, pop.action_of(y));
        for (std::size_t i = 0; i < S; ++i) r[i] += w[y] * p[i];
      }
      return r;
    };
    return fam;
  }

  throw ModelError(sub(field, "type") + ": unknown kernel family '" + type + "'");
}

CostFamily cost_family(const Json& j, const std::string& field, const FiniteGrid& states,
                       const FiniteGrid& actions) {
  const std::string type = type_of(j, field);
  const std::size_t S = states.size();
  const std::size_t M = actions.size();
  CostFamily fam;

  if (type == "zero" || type == "constant") {
    const double c = type == "zero" ? 0.0 : param(j, "value", field, 0.0);
    fam.cost = [c](std::size_t, std::size_t, const Population&) { return c; };
    fam.tilde = [c](std::size_t, std::size_t, std::size_t, std::size_t) { return c; };
    return fam;
  }

  if (type == "table") {
    auto v = std::make_shared<std::vector<double>>(tensor(need(j, "values", field), sub(field, "values"), {S, M}));
    fam.cost = [v, M](std::size_t x, std::size_t a, const Population&) { return (*v)[x * M + a]; };
    fam.tilde = [v, M](std::size_t x, std::size_t, std::size_t a, std::size_t) {
      return (*v)[x * M + a];
    };
    return fam;
  }

  if (type == "quadratic") {
    require_scalar(states, field, "states");
    require_scalar(actions, field, "actions");
    const double q = param(j, "q", field, 0.0);
    const double ref = param(j, "x_ref", field, 0.0);
    const double q_mean = param(j, "q_mean", field, 0.0);
    const double r = param(j, "r", field, 0.0);
    const double r_mean = param(j, "r_mean", field, 0.0);
    const double l = param(j, "l", field, 0.0);
    const double l_mean = param(j, "l_mean", field, 0.0);
    const double cross = param(j, "cross", field, 0.0);
    std::vector<double> xs(S), as(M);
    for (std::size_t i = 0; i < S; ++i) xs[i] = states.scalar(i);
    for (std::size_t i = 0; i < M; ++i) as[i] = actions.scalar(i);
    fam.interacts = q_mean != 0.0 || r_mean != 0.0 || l_mean != 0.0 || cross != 0.0;
    fam.cost = [=](std::size_t x, std::size_t a, const Population& pop) {
      const double m = pop.state_mean()[0];
      const double lam = pop.action_mean()[0];
      const double dx = xs[x] - ref;
      const double dm = xs[x] - m;
      return q * dx * dx + q_mean * dm * dm + r * as[a] * as[a] + r_mean * lam * lam +
             l * xs[x] + l_mean * m + cross * xs[x] * m;
    };
    if (q_mean == 0.0 && r_mean == 0.0) {
      fam.tilde = [=](std::size_t x, std::size_t y, std::size_t a, std::size_t) {
        const double dx = xs[x] - ref;
        return q * dx * dx + r * as[a] * as[a] + l * xs[x] + l_mean * xs[y] + cross * xs[x] * xs[y];
      };
    }
    return fam;
  }

  if (type == "first_order") {
    auto t = std::make_shared<std::vector<double>>(
        tensor(need(j, "tensor", field), sub(field, "tensor"), {S, S, M, M}));
    fam.interacts = true;
    fam.tilde = [t, S, M](std::size_t x, std::size_t y, std::size_t a, std::size_t b) {
      return (*t)[((x * S + y) * M + a) * M + b];
    };
    auto tilde = fam.tilde;
    fam.cost = [tilde, S](std::size_t x, std::size_t a, const Population& pop) {
      double s = 0.0;
      const auto w = pop.state_weights();
      for (std::size_t y = 0; y < S; ++y) {
        if (w[y] != 0.0) s += w[y] * tilde(x, y, a, pop.action_of(y));
      }
      return s;
    };
    return fam;
  }

  throw ModelError(sub(field, "type") + ": unknown stage cost family '" + type + "'");
}

TermFamily terminal_family(const Json& j, const std::string& field, const FiniteGrid& states) {
  const std::string type = type_of(j, field);
  const std::size_t S = states.size();
  TermFamily fam;

  if (type == "zero" || type == "constant") {
    const double c = type == "zero" ? 0.0 : param(j, "value", field, 0.0);
    fam.cost = [c](std::size_t, const GridLaw&) { return c; };
    fam.tilde = [c](std::size_t, std::size_t) { return c; };
    return fam;
  }

  if (type == "table") {
    auto v = std::make_shared<std::vector<double>>(tensor(need(j, "values", field), sub(field, "values"), {S}));
    fam.cost = [v](std::size_t x, const GridLaw&) { return (*v)[x]; };
    fam.tilde = [v](std::size_t x, std::size_t) { return (*v)[x]; };
    return fam;
  }

  if (type == "quadratic") {
    require_scalar(states, field, "states");
    const double q = param(j, "q", field, 0.0);
    const double ref = param(j, "x_ref", field, 0.0);
    const double q_mean = param(j, "q_mean", field, 0.0);
    const double l = param(j, "l", field, 0.0);
    const double l_mean = param(j, "l_mean", field, 0.0);
    const double cross = param(j, "cross", field, 0.0);
    std::vector<double> xs(S);
    for (std::size_t i = 0; i < S; ++i) xs[i] = states.scalar(i);
    fam.interacts = q_mean != 0.0 || l_mean != 0.0 || cross != 0.0;
    fam.cost = [=](std::size_t x, const GridLaw& law) {
      const double m = law.mean()[0];
      const double dx = xs[x] - ref;
      const double dm = xs[x] - m;
      return q * dx * dx + q_mean * dm * dm + l * xs[x] + l_mean * m + cross * xs[x] * m;
    };
    if (q_mean == 0.0) {
      fam.tilde = [=](std::size_t x, std::size_t y) {
        const double dx = xs[x] - ref;
        return q * dx * dx + l * xs[x] + l_mean * xs[y] + cross * xs[x] * xs[y];
      };
    }
    return fam;
  }

  if (type == "first_order") {
    auto t = std::make_shared<std::vector<double>>(tensor(need(j, "matrix", field), sub(field, "matrix"), {S, S}));
    fam.interacts = true;
    fam.tilde = [t, S](std::size_t x, std::size_t y) { return (*t)[x * S + y]; };
    auto tilde = fam.tilde;
    fam.cost = [tilde, S](std::size_t x, const GridLaw& law) {
      double s = 0.0;
      for (std::size_t y = 0; y < S; ++y) {
        if (law.weight(y) != 0.0) s += law.weight(y) * tilde(x, y);
      }
      return s;
    };
    return fam;
  }

  throw ModelError(sub(field, "type") + ": unknown terminal cost family '" + type + "'");
}

const Json& require(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw ModelError(std::string(key) + ": missing");
  return *it;
}

}  // namespace

FiniteScenario finite_scenario_from_json(const Json& j) {
  if (!j.is_object()) throw ModelError("model: expected an object");
  FiniteGrid states = grid_from_json(require(j, "states"), "states");
  FiniteGrid actions = grid_from_json(require(j, "actions"), "actions");
  const Json& hj = require(j, "horizon");
  if (!hj.is_number_integer() || hj.get<int>() < 1) throw ModelError("horizon: must be an integer >= 1");
  const int n = hj.get<int>();

  std::vector<KernelFamily> kernels;
  {
    const auto specs = per_stage(require(j, "kernel"), "kernel", n);
    for (int k = 0; k < n; ++k) {
      const std::string f = require(j, "kernel").is_array() ? at("kernel", k) : "kernel";
      kernels.push_back(kernel_family(specs[k], f, states, actions));
    }
  }
  std::vector<CostFamily> costs;
  {
    const Json zero = {{"type", "zero"}};
    const Json& spec = j.contains("stage_cost") ? j["stage_cost"] : zero;
    const auto specs = per_stage(spec, "stage_cost", n);
    for (int k = 0; k < n; ++k) {
      const std::string f = spec.is_array() ? at("stage_cost", k) : "stage_cost";
      costs.push_back(cost_family(specs[k], f, states, actions));
    }
  }
  const Json zero = {{"type", "zero"}};
  TermFamily terminal =
      terminal_family(j.contains("terminal_cost") ? j["terminal_cost"] : zero, "terminal_cost", states);

  bool interacts = terminal.interacts;
  bool first_order = static_cast<bool>(terminal.tilde);
  bool any_first_order_kernel = false;
  for (int k = 0; k < n; ++k) {
    interacts = interacts || kernels[k].interacts || costs[k].interacts;
    first_order = first_order && kernels[k].tilde && costs[k].tilde;
    any_first_order_kernel = any_first_order_kernel || static_cast<bool>(kernels[k].tilde);
  }
  if (any_first_order_kernel && !first_order) {
    throw ModelError(
        "kernel: first_order kernels need first_order kernels at every stage and costs linear in "
        "the measure (zero, constant, table, first_order, or quadratic without q_mean/r_mean)");
  }

  std::optional<FiniteMFModel> model;
  if (first_order) {
    FirstOrderComponents c;
    c.kernel = [kernels](int k, std::size_t x, std::size_t y, std::size_t a, std::size_t b) {
      return kernels[k].tilde(x, y, a, b);
    };
    c.stage_cost = [costs](int k, std::size_t x, std::size_t y, std::size_t a, std::size_t b) {
      return costs[k].tilde(x, y, a, b);
    };
    c.terminal_cost = terminal.tilde;
    model.emplace(FiniteMFModel::first_order(states, actions, n, std::move(c)));
  } else {
    auto row = [kernels](int k, std::size_t x, std::size_t a, const Population& pop) {
      return kernels[k].row(x, a, pop);
    };
    auto stage = [costs](int k, std::size_t x, std::size_t a, const Population& pop) {
      return costs[k].cost(x, a, pop);
    };
    model.emplace(states, actions, n, row, stage, terminal.cost);
  }
  model->declare_no_interaction(!interacts);

  DiscreteMeasure initial = DiscreteMeasure::dirac(states[0]);
  const Json& init = require(j, "initial");
  if (init.is_string() && init.get<std::string>() == "uniform") {
    initial = DiscreteMeasure(states.points(), std::vector<double>(states.size(), 1.0 / states.size()));
  } else {
    initial = measure_from_json(init, "initial");
  }
  for (const auto& x : initial.support()) {
    if (!states.index_of(x)) throw ModelError("initial: atom " + format_point(x) + " is not a state");
  }

  std::string name = j.contains("name") ? j["name"].get<std::string>() : "";
  return {std::move(name), std::move(*model), std::move(initial)};
}

MeanVarianceParams mean_variance_from_json(const Json& j) {
  MeanVarianceParams p;
  if (!j.is_object()) throw ModelError("meanvariance: expected an object");
  p.gamma = param(j, "gamma", "meanvariance", p.gamma);
  p.b = param(j, "b", "meanvariance", p.b);
  p.sigma = param(j, "sigma", "meanvariance", p.sigma);
  p.x0 = param(j, "x0", "meanvariance", p.x0);
  if (j.contains("n")) {
    if (!j["n"].is_number_integer()) throw ModelError("meanvariance.n: expected an integer");
    p.n = j["n"].get<int>();
  }
  if (j.contains("delta") && j.contains("T")) {
    throw ModelError("meanvariance: give either delta or T, not both");
  }
  p.delta = j.contains("T") ? param(j, "T", "meanvariance", 1.0) / p.n
                            : param(j, "delta", "meanvariance", p.delta);
  try {
    p.validate();
  } catch (const std::invalid_argument& e) {
    throw ModelError(std::string("meanvariance: ") + e.what());
  }
  return p;
}

Json to_json(const MeanVarianceParams& p) {
  return {{"kind", "meanvariance"}, {"gamma", p.gamma}, {"b", p.b},   {"sigma", p.sigma},
          {"delta", p.delta},       {"n", p.n},         {"x0", p.x0}};
}

FiniteScenario ScenarioConfig::finite() const {
  if (kind != Kind::Finite) throw ModelError("kind: scenario is not 'finite'");
  return finite_scenario_from_json(payload);
}

LQModel ScenarioConfig::lq() const {
  if (kind == Kind::MeanVariance) return mean_variance_model(mean_variance());
  if (kind != Kind::LQ) throw ModelError("kind: scenario is not 'lq' or 'meanvariance'");
  return lq_model_from_json(payload);
}

MeanVarianceParams ScenarioConfig::mean_variance() const {
  if (kind != Kind::MeanVariance) throw ModelError("kind: scenario is not 'meanvariance'");
  return mean_variance_from_json(payload);
}

ScenarioConfig scenario_from_json(const Json& j, std::string path) {
  if (!j.is_object()) throw ModelError("config: expected an object");
  const Json& kj = require(j, "kind");
  if (!kj.is_string()) throw ModelError("kind: expected a string");
  const std::string k = kj.get<std::string>();
  ScenarioConfig cfg{ScenarioConfig::Kind::Finite, std::move(path), j, {}};
  if (k == "finite") cfg.kind = ScenarioConfig::Kind::Finite;
  else if (k == "lq") cfg.kind = ScenarioConfig::Kind::LQ;
  else if (k == "meanvariance") cfg.kind = ScenarioConfig::Kind::MeanVariance;
  else throw ModelError("kind: unknown scenario kind '" + k + "'");

  if (j.contains("run")) {
    const Json& r = j["run"];
    if (!r.is_object()) throw ModelError("run: expected an object");
    if (r.contains("particles")) cfg.run.particles = r["particles"].get<std::size_t>();
    if (r.contains("seed")) cfg.run.seed = r["seed"].get<std::uint64_t>();
    if (r.contains("node_budget")) cfg.run.node_budget = r["node_budget"].get<std::uint64_t>();
    if (r.contains("closure")) cfg.run.closure = r["closure"].get<std::string>();
  }
  // Build once so that a bad payload fails at load time.
  switch (cfg.kind) {
    case ScenarioConfig::Kind::Finite: (void)cfg.finite(); break;
    case ScenarioConfig::Kind::LQ: (void)cfg.lq(); break;
    case ScenarioConfig::Kind::MeanVariance: (void)cfg.mean_variance(); break;
  }
  return cfg;
}

ScenarioConfig load_scenario(const std::string& path) {
  return scenario_from_json(read_json_file(path), path);
}

}  // namespace mfc
