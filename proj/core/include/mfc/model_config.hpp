#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "mfc/lq.hpp"
#include "mfc/model.hpp"
#include "mfc/serialize.hpp"

namespace mfc {

/// A finite model built from its declarative description, with the initial
/// law it ships with.
struct FiniteScenario {
  std::string name;
  FiniteMFModel model;
  DiscreteMeasure initial;
};

/// Builds a FiniteMFModel from the `finite` config kind. Kernel and cost
/// families are selected by their "type" tag; see docs/config.md for the
/// formulas. Throws ModelError naming the offending field.
FiniteScenario finite_scenario_from_json(const Json& j);

MeanVarianceParams mean_variance_from_json(const Json& j);
Json to_json(const MeanVarianceParams& p);

struct RunParameters {
  std::size_t particles = 10'000;
  std::optional<std::uint64_t> seed;
  std::uint64_t node_budget = 2'000'000;
  std::string closure = "empirical";
};

/// Top-level scenario file: {"kind": "finite" | "lq" | "meanvariance", ...,
/// "run": {...}}. The model payload sits at the top level.
struct ScenarioConfig {
  enum class Kind { Finite, LQ, MeanVariance };
  Kind kind;
  std::string path;
  Json payload;
  RunParameters run;

  FiniteScenario finite() const;
  /// LQ model; for meanvariance the wealth-model encoding.
  LQModel lq() const;
  MeanVarianceParams mean_variance() const;
};

ScenarioConfig scenario_from_json(const Json& j, std::string path = {});
ScenarioConfig load_scenario(const std::string& path);

}  // namespace mfc
