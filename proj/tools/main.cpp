// mfc: command line front end for the mean-field control toolkit.

#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"
#include "mfc/errors.hpp"

namespace {

void add_output(CLI::App* cmd, mfc::cli::Output& out, bool csv = true) {
  cmd->add_option("-o,--out", out.json_path, "JSON output path (default: stdout)");
  if (csv) cmd->add_option("--csv", out.csv_path, "per-stage CSV output path");
}

}  // namespace

int main(int argc, char** argv) {
  using namespace mfc::cli;

  CLI::App app{"Mean-field (McKean-Vlasov) control: finite DPP, LQ Riccati, Monte Carlo"};
  app.require_subcommand(1);

  SolveFiniteArgs solve_args;
  auto* solve_cmd = app.add_subcommand("solve-finite", "exact measure-space DPP on a finite model");
  solve_cmd->add_option("config", solve_args.config, "finite scenario JSON")->required();
  solve_cmd->add_option("--node-budget", solve_args.node_budget, "maximum distinct tree nodes");
  add_output(solve_cmd, solve_args.out);

  RiccatiArgs riccati_args;
  auto* riccati_cmd = app.add_subcommand("riccati", "Riccati solution and optimal affine policy");
  riccati_cmd->add_option("config", riccati_args.config, "lq or meanvariance scenario JSON")->required();
  riccati_cmd->add_flag("--force", riccati_args.force, "solve even if (c0)-(c2) fail");
  add_output(riccati_cmd, riccati_args.out);

  MeanVarianceArgs mv_args;
  auto* mv_cmd = app.add_subcommand("meanvariance", "closed-form mean-variance portfolio problem");
  mv_cmd->add_option("--gamma", mv_args.gamma, "risk aversion")->capture_default_str();
  mv_cmd->add_option("--b", mv_args.b, "excess drift")->capture_default_str();
  mv_cmd->add_option("--sigma", mv_args.sigma, "volatility")->capture_default_str();
  auto* delta_opt = mv_cmd->add_option("--delta", mv_args.delta, "time step (default 1)");
  mv_cmd->add_option("--T", mv_args.horizon_time, "horizon; sets delta = T / n")->excludes(delta_opt);
  mv_cmd->add_option("--n", mv_args.n, "number of periods")->capture_default_str();
  mv_cmd->add_option("--x0", mv_args.x0, "initial wealth")->capture_default_str();
  add_output(mv_cmd, mv_args.out, false);

  SimulateArgs sim_args;
  auto* sim_cmd = app.add_subcommand("simulate", "N-particle Monte Carlo estimate of J");
  sim_cmd->add_option("config", sim_args.config, "scenario JSON")->required();
  sim_cmd->add_option("--policy", sim_args.policy, "riccati | zero | policy JSON file")
      ->capture_default_str();
  sim_cmd->add_option("-N,--particles", sim_args.particles, "number of particles");
  sim_cmd->add_option("--seed", sim_args.seed, "RNG seed")->required();
  sim_cmd->add_option("--closure", sim_args.closure, "empirical | oracle-law")
      ->check(CLI::IsMember({"empirical", "oracle-law"}))
      ->capture_default_str();
  add_output(sim_cmd, sim_args.out);

  VerifyArgs verify_args;
  auto* verify_cmd = app.add_subcommand("verify", "cross-oracle checks on scenario files");
  verify_cmd->add_option("configs", verify_args.configs, "scenario files (default: ./fixtures)");
  verify_cmd->add_option("-N,--particles", verify_args.particles, "Monte Carlo particles")
      ->capture_default_str();
  verify_cmd->add_option("--seed", verify_args.seed, "seed for random checks")->capture_default_str();
  verify_cmd->add_option("--json", verify_args.json_path, "write the table as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kBadConfig;
  }

  try {
    if (*solve_cmd) return solve_finite(solve_args);
    if (*riccati_cmd) return riccati(riccati_args);
    if (*mv_cmd) return meanvariance(mv_args);
    if (*sim_cmd) return simulate(sim_args);
    if (*verify_cmd) return verify(verify_args);
  } catch (const mfc::ModelError& e) {
    std::cerr << "mfc: invalid model or config: " << e.what() << '\n';
    return kBadConfig;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "mfc: malformed config: " << e.what() << '\n';
    return kBadConfig;
  } catch (const mfc::NumericalError& e) {
    std::cerr << "mfc: numerical failure at stage " << e.stage() << ": " << e.what() << '\n';
    return kNumerical;
  } catch (const mfc::BudgetError& e) {
    std::cerr << "mfc: " << e.what() << " (required " << e.required() << ", budget " << e.budget()
              << ")\n";
    return kNumerical;
  } catch (const std::exception& e) {
    std::cerr << "mfc: " << e.what() << '\n';
    return kNumerical;
  }
  return kOk;
}
