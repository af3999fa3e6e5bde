#include "mfc/serialize.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "mfc/errors.hpp"

namespace mfc {

namespace {

const Json& require(const Json& j, const char* key, const std::string& field) {
  if (!j.is_object()) throw ModelError(field + ": expected an object");
  auto it = j.find(key);
  if (it == j.end()) throw ModelError(field + "." + key + ": missing");
  return *it;
}

std::string sub(const std::string& field, const std::string& key) { return field + "." + key; }
std::string at(const std::string& field, std::size_t i) {
  return field + "[" + std::to_string(i) + "]";
}

int int_from_json(const Json& j, const std::string& field) {
  if (!j.is_number_integer() && !j.is_number_unsigned()) {
    throw ModelError(field + ": expected an integer");
  }
  return j.get<int>();
}

template <class T, class F>
std::vector<T> list_from_json(const Json& j, const std::string& field, F&& item) {
  if (!j.is_array()) throw ModelError(field + ": expected an array");
  std::vector<T> out;
  out.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(item(j[i], at(field, i)));
  return out;
}

Json matrices_to_json(const std::vector<Eigen::MatrixXd>& xs) {
  Json out = Json::array();
  for (const auto& x : xs) out.push_back(matrix_to_json(x));
  return out;
}

std::vector<Eigen::MatrixXd> matrices_from_json(const Json& j, const std::string& field) {
  return list_from_json<Eigen::MatrixXd>(j, field, matrix_from_json);
}

}  // namespace

Json number_to_json(double x) {
  if (std::isnan(x)) return nullptr;
  return x;
}

double number_from_json(const Json& j, const std::string& field) {
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  if (!j.is_number()) throw ModelError(field + ": expected a number");
  return j.get<double>();
}

Json matrix_to_json(const Eigen::MatrixXd& a) {
  Json data = Json::array();
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    for (Eigen::Index c = 0; c < a.cols(); ++c) data.push_back(number_to_json(a(r, c)));
  }
  return {{"rows", a.rows()}, {"cols", a.cols()}, {"data", std::move(data)}};
}

Eigen::MatrixXd matrix_from_json(const Json& j, const std::string& field) {
  if (j.is_number()) return Eigen::MatrixXd::Constant(1, 1, j.get<double>());
  if (j.is_array()) {
    const std::size_t rows = j.size();
    if (rows == 0) throw ModelError(field + ": empty matrix");
    if (!j[0].is_array()) throw ModelError(field + ": expected an array of rows");
    const std::size_t cols = j[0].size();
    Eigen::MatrixXd a(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
      if (!j[r].is_array() || j[r].size() != cols) {
        throw ModelError(at(field, r) + ": row length differs from row 0");
      }
      for (std::size_t c = 0; c < cols; ++c) {
        a(r, c) = number_from_json(j[r][c], at(at(field, r), c));
      }
    }
    return a;
  }
  const int rows = int_from_json(require(j, "rows", field), sub(field, "rows"));
  const int cols = int_from_json(require(j, "cols", field), sub(field, "cols"));
  const Json& data = require(j, "data", field);
  if (rows < 0 || cols < 0) throw ModelError(field + ": negative dimension");
  if (!data.is_array() || data.size() != static_cast<std::size_t>(rows) * cols) {
    throw ModelError(sub(field, "data") + ": expected " + std::to_string(rows * cols) + " entries");
  }
  Eigen::MatrixXd a(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const std::size_t i = static_cast<std::size_t>(r) * cols + c;
      a(r, c) = number_from_json(data[i], at(sub(field, "data"), i));
    }
  }
  return a;
}

Json vector_to_json(const Eigen::VectorXd& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(number_to_json(v[i]));
  return out;
}

Eigen::VectorXd vector_from_json(const Json& j, const std::string& field) {
  if (j.is_number()) return Eigen::VectorXd::Constant(1, j.get<double>());
  if (!j.is_array()) throw ModelError(field + ": expected an array");
  Eigen::VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v[i] = number_from_json(j[i], at(field, i));
  return v;
}

Point point_from_json(const Json& j, const std::string& field) {
  Point p = vector_from_json(j, field);
  if (p.size() == 0) throw ModelError(field + ": empty point");
  return p;
}

Json to_json(const DiscreteMeasure& mu) {
  Json support = Json::array();
  for (const auto& x : mu.support()) support.push_back(vector_to_json(x));
  Json weights = Json::array();
  for (double w : mu.weights()) weights.push_back(w);
  return {{"support", std::move(support)}, {"weights", std::move(weights)}};
}

DiscreteMeasure measure_from_json(const Json& j, const std::string& field) {
  auto support = list_from_json<Point>(require(j, "support", field), sub(field, "support"),
                                       point_from_json);
  auto weights = list_from_json<double>(require(j, "weights", field), sub(field, "weights"),
                                        number_from_json);
  try {
    return DiscreteMeasure(std::move(support), std::move(weights));
  } catch (const std::invalid_argument& e) {
    throw ModelError(field + ": " + e.what());
  }
}

Json to_json(const TabularMap& map) {
  Json domain = Json::array();
  Json values = Json::array();
  for (const auto& x : map.domain()) domain.push_back(vector_to_json(x));
  for (const auto& a : map.values()) values.push_back(vector_to_json(a));
  return {{"domain", std::move(domain)}, {"values", std::move(values)}};
}

TabularMap tabular_map_from_json(const Json& j, const std::string& field) {
  auto domain = list_from_json<Point>(require(j, "domain", field), sub(field, "domain"),
                                      point_from_json);
  auto values = list_from_json<Point>(require(j, "values", field), sub(field, "values"),
                                      point_from_json);
  try {
    return TabularMap(std::move(domain), std::move(values));
  } catch (const std::invalid_argument& e) {
    throw ModelError(field + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// LQ models

namespace {

constexpr const char* kSquareFields[] = {"B", "Bbar", "D", "Dbar", "Q", "Qbar"};
constexpr const char* kControlFields[] = {"C", "Cbar", "H", "Hbar"};
constexpr const char* kActionFields[] = {"R", "Rbar"};

Eigen::MatrixXd& stage_matrix(LQStage& s, const std::string& name) {
  if (name == "B") return s.B;
  if (name == "Bbar") return s.Bbar;
  if (name == "D") return s.D;
  if (name == "Dbar") return s.Dbar;
  if (name == "Q") return s.Q;
  if (name == "Qbar") return s.Qbar;
  if (name == "C") return s.C;
  if (name == "Cbar") return s.Cbar;
  if (name == "H") return s.H;
  if (name == "Hbar") return s.Hbar;
  if (name == "R") return s.R;
  return s.Rbar;
}

void read_matrix(const Json& j, const char* key, const std::string& field, Eigen::MatrixXd& out,
                 int rows, int cols) {
  auto it = j.find(key);
  if (it == j.end()) return;  // keeps the zero default
  Eigen::MatrixXd a = matrix_from_json(*it, sub(field, key));
  if (a.rows() != rows || a.cols() != cols) {
    throw ModelError(sub(field, key) + ": expected " + std::to_string(rows) + "x" +
                     std::to_string(cols) + ", got " + std::to_string(a.rows()) + "x" +
                     std::to_string(a.cols()));
  }
  out = std::move(a);
}

void read_vector(const Json& j, const char* key, const std::string& field, Eigen::VectorXd& out,
                 int size) {
  auto it = j.find(key);
  if (it == j.end()) return;
  Eigen::VectorXd v = vector_from_json(*it, sub(field, key));
  if (v.size() != size) {
    throw ModelError(sub(field, key) + ": expected length " + std::to_string(size));
  }
  out = std::move(v);
}

LQStage stage_from_json(const Json& j, const std::string& field, int d, int m) {
  if (!j.is_object()) throw ModelError(field + ": expected an object");
  LQStage s = LQStage::zeros(d, m);
  for (const char* k : kSquareFields) read_matrix(j, k, field, stage_matrix(s, k), d, d);
  for (const char* k : kControlFields) read_matrix(j, k, field, stage_matrix(s, k), d, m);
  for (const char* k : kActionFields) read_matrix(j, k, field, stage_matrix(s, k), m, m);
  read_vector(j, "L", field, s.L, d);
  read_vector(j, "Lbar", field, s.Lbar, d);
  return s;
}

Json stage_to_json(const LQStage& s) {
  Json out = Json::object();
  LQStage copy = s;
  for (const char* k : kSquareFields) out[k] = matrix_to_json(stage_matrix(copy, k));
  for (const char* k : kControlFields) out[k] = matrix_to_json(stage_matrix(copy, k));
  for (const char* k : kActionFields) out[k] = matrix_to_json(stage_matrix(copy, k));
  out["L"] = vector_to_json(s.L);
  out["Lbar"] = vector_to_json(s.Lbar);
  return out;
}

}  // namespace

Json to_json(const GaussianState& state) {
  return {{"mean", vector_to_json(state.mean)}, {"cov", matrix_to_json(state.cov)}};
}

GaussianState gaussian_from_json(const Json& j, const std::string& field) {
  GaussianState g;
  g.mean = vector_from_json(require(j, "mean", field), sub(field, "mean"));
  if (j.contains("cov")) {
    g.cov = matrix_from_json(j["cov"], sub(field, "cov"));
  } else {
    g.cov = Eigen::MatrixXd::Zero(g.mean.size(), g.mean.size());
  }
  if (g.cov.rows() != g.mean.size() || g.cov.cols() != g.mean.size()) {
    throw ModelError(sub(field, "cov") + ": dimension does not match the mean");
  }
  return g;
}

Json initial_law_to_json(const InitialLaw& law) {
  if (const auto* g = std::get_if<GaussianState>(&law)) return {{"gaussian", to_json(*g)}};
  return to_json(std::get<DiscreteMeasure>(law));
}

InitialLaw initial_law_from_json(const Json& j, const std::string& field) {
  if (!j.is_object()) throw ModelError(field + ": expected an object");
  if (j.contains("gaussian")) return gaussian_from_json(j["gaussian"], sub(field, "gaussian"));
  if (j.contains("mean")) return gaussian_from_json(j, field);
  return measure_from_json(j, field);
}

Json to_json(const LQModel& model) {
  Json stages = Json::array();
  for (const auto& s : model.stages) stages.push_back(stage_to_json(s));
  return {{"kind", "lq"},
          {"d", model.d},
          {"m", model.m},
          {"horizon", model.horizon()},
          {"stages", std::move(stages)},
          {"terminal",
           {{"Q", matrix_to_json(model.Q)},
            {"Qbar", matrix_to_json(model.Qbar)},
            {"L", vector_to_json(model.L)},
            {"Lbar", vector_to_json(model.Lbar)}}},
          {"initial", initial_law_to_json(model.initial)}};
}

LQModel lq_model_from_json(const Json& j) {
  const std::string root = "model";
  const int d = int_from_json(require(j, "d", root), "d");
  const int m = int_from_json(require(j, "m", root), "m");
  const int n = int_from_json(require(j, "horizon", root), "horizon");
  if (d < 1 || m < 1) throw ModelError("d, m: must be at least 1");
  if (n < 1) throw ModelError("horizon: must be at least 1");

  LQModel model = LQModel::zeros(d, m, n);
  if (j.contains("stages")) {
    const Json& stages = j["stages"];
    if (!stages.is_array() || stages.size() != static_cast<std::size_t>(n)) {
      throw ModelError("stages: expected exactly horizon = " + std::to_string(n) + " entries");
    }
    for (int k = 0; k < n; ++k) model.stages[k] = stage_from_json(stages[k], at("stages", k), d, m);
  } else if (j.contains("stage")) {
    const LQStage s = stage_from_json(j["stage"], "stage", d, m);
    model.stages.assign(n, s);
  } else {
    throw ModelError("stages: missing (give 'stages' with n entries or a shared 'stage')");
  }

  model.Q = Eigen::MatrixXd::Zero(d, d);
  model.Qbar = Eigen::MatrixXd::Zero(d, d);
  model.L = Eigen::VectorXd::Zero(d);
  model.Lbar = Eigen::VectorXd::Zero(d);
  if (j.contains("terminal")) {
    const Json& t = j["terminal"];
    if (!t.is_object()) throw ModelError("terminal: expected an object");
    read_matrix(t, "Q", "terminal", model.Q, d, d);
    read_matrix(t, "Qbar", "terminal", model.Qbar, d, d);
    read_vector(t, "L", "terminal", model.L, d);
    read_vector(t, "Lbar", "terminal", model.Lbar, d);
  }
  model.initial = initial_law_from_json(require(j, "initial", root), "initial");
  if (moments(model.initial).dimension() != d) {
    throw ModelError("initial: dimension does not match d = " + std::to_string(d));
  }
  try {
    model.validate();
  } catch (const std::invalid_argument& e) {
    throw ModelError(e.what());
  }
  return model;
}

// ---------------------------------------------------------------------------
// Solutions and policies

Json to_json(const RiccatiSolution& sol) {
  Json rho = Json::array();
  for (const auto& r : sol.rho) rho.push_back(vector_to_json(r));
  Json chi = Json::array();
  for (double c : sol.chi) chi.push_back(number_to_json(c));
  return {{"horizon", sol.horizon()},
          {"Lambda", matrices_to_json(sol.Lambda)},
          {"Gamma", matrices_to_json(sol.Gamma)},
          {"rho", std::move(rho)},
          {"chi", std::move(chi)},
          {"V", matrices_to_json(sol.V)},
          {"W", matrices_to_json(sol.W)},
          {"S", matrices_to_json(sol.S)},
          {"T", matrices_to_json(sol.T)},
          {"N", matrices_to_json(sol.N)}};
}

RiccatiSolution riccati_from_json(const Json& j) {
  RiccatiSolution sol;
  sol.Lambda = matrices_from_json(require(j, "Lambda", "riccati"), "Lambda");
  sol.Gamma = matrices_from_json(require(j, "Gamma", "riccati"), "Gamma");
  sol.rho = list_from_json<Eigen::VectorXd>(require(j, "rho", "riccati"), "rho", vector_from_json);
  sol.chi = list_from_json<double>(require(j, "chi", "riccati"), "chi", number_from_json);
  for (const char* k : {"V", "W", "S", "T", "N"}) {
    auto xs = j.contains(k) ? matrices_from_json(j[k], k) : std::vector<Eigen::MatrixXd>{};
    if (std::string(k) == "V") sol.V = std::move(xs);
    else if (std::string(k) == "W") sol.W = std::move(xs);
    else if (std::string(k) == "S") sol.S = std::move(xs);
    else if (std::string(k) == "T") sol.T = std::move(xs);
    else sol.N = std::move(xs);
  }
  const std::size_t len = sol.Lambda.size();
  if (len == 0 || sol.Gamma.size() != len || sol.rho.size() != len || sol.chi.size() != len) {
    throw ModelError("riccati: Lambda, Gamma, rho, chi must have equal nonzero length");
  }
  return sol;
}

Json to_json(const AffinePolicy& policy) {
  Json stages = Json::array();
  for (const auto& s : policy.stages) {
    stages.push_back({{"gain_state", matrix_to_json(s.gain_state)},
                      {"gain_mean", matrix_to_json(s.gain_mean)},
                      {"offset", vector_to_json(s.offset)}});
  }
  return {{"stages", std::move(stages)}};
}

AffinePolicy affine_policy_from_json(const Json& j) {
  AffinePolicy p;
  p.stages = list_from_json<AffineStage>(
      require(j, "stages", "policy"), "policy.stages", [](const Json& s, const std::string& f) {
        AffineStage a;
        a.gain_state = matrix_from_json(require(s, "gain_state", f), sub(f, "gain_state"));
        a.gain_mean = matrix_from_json(require(s, "gain_mean", f), sub(f, "gain_mean"));
        a.offset = vector_from_json(require(s, "offset", f), sub(f, "offset"));
        return a;
      });
  return p;
}

Json to_json(const std::vector<ExplicitControl>& controls) {
  Json out = Json::array();
  for (const auto& c : controls) {
    out.push_back({{"feedback", matrix_to_json(c.feedback)},
                   {"initial_mean_gain", matrix_to_json(c.initial_mean_gain)},
                   {"constant", vector_to_json(c.constant)}});
  }
  return out;
}

std::vector<ExplicitControl> explicit_controls_from_json(const Json& j) {
  return list_from_json<ExplicitControl>(j, "explicit_control", [](const Json& c,
                                                                   const std::string& f) {
    ExplicitControl e;
    e.feedback = matrix_from_json(require(c, "feedback", f), sub(f, "feedback"));
    e.initial_mean_gain =
        matrix_from_json(require(c, "initial_mean_gain", f), sub(f, "initial_mean_gain"));
    e.constant = vector_from_json(require(c, "constant", f), sub(f, "constant"));
    return e;
  });
}

Json to_json(const ConditionReport& report) {
  Json stages = Json::array();
  for (const auto& s : report.stages) {
    stages.push_back({{"stage", s.stage},
                      {"c0", s.c0},
                      {"c1", s.c1},
                      {"c2", s.c2},
                      {"c1_literal", s.c1_literal},
                      {"c2_literal", s.c2_literal},
                      {"detail", s.detail}});
  }
  return {{"passed", report.passed()},
          {"terminal_c0", report.terminal_c0},
          {"first_failure", report.first_failure()},
          {"stages", std::move(stages)}};
}

Json to_json(const SolveResult& result) {
  Json policies = Json::array();
  for (std::size_t k = 0; k < result.optimal_policy_sequence.size(); ++k) {
    Json p = to_json(result.optimal_policy_sequence[k]);
    p["action_indices"] = result.optimal_policy_indices[k];
    policies.push_back(std::move(p));
  }
  Json traj = Json::array();
  for (const auto& mu : result.optimal_trajectory) traj.push_back(to_json(mu));
  return {{"v0", number_to_json(result.v0)},
          {"reachable_tree_size", result.reachable_tree_size},
          {"policy_sequence", std::move(policies)},
          {"trajectory", std::move(traj)}};
}

SolveResult solve_result_from_json(const Json& j) {
  SolveResult r;
  r.v0 = number_from_json(require(j, "v0", "solve"), "v0");
  r.reachable_tree_size = require(j, "reachable_tree_size", "solve").get<std::size_t>();
  const Json& policies = require(j, "policy_sequence", "solve");
  if (!policies.is_array()) throw ModelError("policy_sequence: expected an array");
  for (std::size_t k = 0; k < policies.size(); ++k) {
    r.optimal_policy_sequence.push_back(tabular_map_from_json(policies[k], at("policy_sequence", k)));
    r.optimal_policy_indices.push_back(
        require(policies[k], "action_indices", at("policy_sequence", k)).get<std::vector<std::size_t>>());
  }
  r.optimal_trajectory = list_from_json<DiscreteMeasure>(require(j, "trajectory", "solve"),
                                                         "trajectory", measure_from_json);
  return r;
}

Json to_json(const SimulationResult& result) {
  Json stages = Json::array();
  for (std::size_t k = 0; k < result.stages.size(); ++k) {
    const auto& s = result.stages[k];
    stages.push_back({{"stage", k}, {"mean", vector_to_json(s.mean)}, {"cov", matrix_to_json(s.cov)}});
  }
  return {{"estimate", number_to_json(result.estimate)},
          {"std_error", number_to_json(result.std_error)},
          {"particles", result.particles},
          {"seed", result.seed},
          {"stages", std::move(stages)}};
}

SimulationResult simulation_result_from_json(const Json& j) {
  SimulationResult r;
  r.estimate = number_from_json(require(j, "estimate", "simulation"), "estimate");
  r.std_error = number_from_json(require(j, "std_error", "simulation"), "std_error");
  r.particles = require(j, "particles", "simulation").get<std::size_t>();
  r.seed = require(j, "seed", "simulation").get<std::uint64_t>();
  r.stages = list_from_json<StageStatistics>(
      require(j, "stages", "simulation"), "stages", [](const Json& s, const std::string& f) {
        return StageStatistics{vector_from_json(require(s, "mean", f), sub(f, "mean")),
                               matrix_from_json(require(s, "cov", f), sub(f, "cov"))};
      });
  return r;
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ModelError("cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ModelError(path + ": " + e.what());
  }
}

void write_json_file(const std::string& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << '\n';
}

}  // namespace mfc
