#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mfc/serialize.hpp"

namespace mfc::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kCheckFailed = 1;
inline constexpr int kBadConfig = 2;
inline constexpr int kNumerical = 3;

struct Output {
  std::string json_path;  // empty: stdout
  std::string csv_path;   // empty: no CSV
};

struct SolveFiniteArgs {
  std::string config;
  std::optional<std::uint64_t> node_budget;
  Output out;
};

struct RiccatiArgs {
  std::string config;
  bool force = false;
  Output out;
};

struct MeanVarianceArgs {
  double gamma = 1.0;
  double b = 0.5;
  double sigma = 1.0;
  std::optional<double> delta;
  std::optional<double> horizon_time;
  int n = 2;
  double x0 = 0.0;
  Output out;
};

struct SimulateArgs {
  std::string config;
  std::string policy = "riccati";  // riccati | zero | path to a policy JSON
  std::optional<std::size_t> particles;
  std::uint64_t seed = 0;
  std::string closure = "empirical";
  Output out;
};

struct VerifyArgs {
  std::vector<std::string> configs;
  std::size_t particles = 100'000;
  std::uint64_t seed = 2024;
  std::string json_path;
};

int solve_finite(const SolveFiniteArgs& args);
int riccati(const RiccatiArgs& args);
int meanvariance(const MeanVarianceArgs& args);
int simulate(const SimulateArgs& args);
int verify(const VerifyArgs& args);

void emit_json(const Json& j, const std::string& path);

}  // namespace mfc::cli
