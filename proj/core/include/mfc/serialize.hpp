#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "mfc/dpp.hpp"
#include "mfc/gaussian_mc.hpp"
#include "mfc/lq.hpp"
#include "mfc/measure.hpp"

namespace mfc {

using Json = nlohmann::json;

// Doubles go through nlohmann's shortest round-trip formatting; NaN is
// written as null and read back as NaN.
Json number_to_json(double x);
double number_from_json(const Json& j, const std::string& field);

/// {"rows": r, "cols": c, "data": [row-major]}. Reading also accepts an
/// array of rows, and a bare number for 1×1.
Json matrix_to_json(const Eigen::MatrixXd& a);
Eigen::MatrixXd matrix_from_json(const Json& j, const std::string& field);
Json vector_to_json(const Eigen::VectorXd& v);
Eigen::VectorXd vector_from_json(const Json& j, const std::string& field);

/// Point: array of coordinates, or a bare number in dimension 1.
Point point_from_json(const Json& j, const std::string& field);

/// {"support": [[...], ...], "weights": [...]}; scalar atoms are accepted on input.
Json to_json(const DiscreteMeasure& mu);
DiscreteMeasure measure_from_json(const Json& j, const std::string& field = "measure");

Json to_json(const TabularMap& map);
TabularMap tabular_map_from_json(const Json& j, const std::string& field = "policy");

/// Same schema as the `lq` config kind.
Json to_json(const LQModel& model);
LQModel lq_model_from_json(const Json& j);

Json to_json(const GaussianState& state);
GaussianState gaussian_from_json(const Json& j, const std::string& field);
Json initial_law_to_json(const InitialLaw& law);
InitialLaw initial_law_from_json(const Json& j, const std::string& field = "initial");

Json to_json(const RiccatiSolution& sol);
RiccatiSolution riccati_from_json(const Json& j);

Json to_json(const AffinePolicy& policy);
AffinePolicy affine_policy_from_json(const Json& j);

Json to_json(const std::vector<ExplicitControl>& controls);
std::vector<ExplicitControl> explicit_controls_from_json(const Json& j);

Json to_json(const ConditionReport& report);

/// v0, policies (action points and indices), tree size and the optimal
/// measure trajectory. The value cache is not serialized.
Json to_json(const SolveResult& result);
SolveResult solve_result_from_json(const Json& j);

/// Estimate, standard error and per-stage moments; clouds are not serialized.
Json to_json(const SimulationResult& result);
SimulationResult simulation_result_from_json(const Json& j);

Json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const Json& j);

}  // namespace mfc
