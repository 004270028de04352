// Command-line front end for the experiment runner.
//
//   sgdlab <bounds|verify|sweep|compare> --config FILE [--out DIR] [--seed N]
//          [--force-oracle | --force-mc] [--replicates N] [--threads N]
//          [--strict-beta]

#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "sgdlab/experiment_commands.hpp"
#include "sgdlab/experiment_config.hpp"

namespace {

int as_int(sgdlab::ExitCode code) { return static_cast<int>(code); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Constant-stepsize SGD risk bounds, oracles and sweeps"};
  app.require_subcommand(1, 1);

  std::string config_path;
  sgdlab::CommandOverrides overrides;
  std::string out_dir;
  std::uint64_t seed = 0;
  std::size_t replicates = 0;
  std::size_t threads = 0;
  bool force_oracle = false;
  bool force_mc = false;
  bool strict_beta = false;

  for (const char* name : {"bounds", "verify", "sweep", "compare"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "Experiment config (YAML or JSON)")->required();
    sub->add_option("--out", out_dir, "Output directory (overrides output.dir)");
    sub->add_option("--seed", seed, "Base random seed");
    auto* oracle = sub->add_flag("--force-oracle", force_oracle, "Always use the exact oracle");
    auto* mc = sub->add_flag("--force-mc", force_mc, "Always use Monte Carlo");
    oracle->excludes(mc);
    sub->add_option("--replicates", replicates, "Monte Carlo replicates")
        ->check(CLI::PositiveNumber);
    sub->add_option("--threads", threads, "Worker threads (0 = all cores)");
    sub->add_flag("--strict-beta", strict_beta, "Fail verify when the beta = 2 claim fails");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : as_int(sgdlab::ExitCode::kConfigError);
  }

  const CLI::App* sub = app.get_subcommands().front();
  if (sub->count("--out") > 0) overrides.out_dir = out_dir;
  if (sub->count("--seed") > 0) overrides.seed = seed;
  if (sub->count("--replicates") > 0) overrides.replicates = replicates;
  if (sub->count("--threads") > 0) overrides.threads = threads;
  if (force_oracle) overrides.oracle = sgdlab::OracleMode::kForceOracle;
  if (force_mc) overrides.oracle = sgdlab::OracleMode::kForceMonteCarlo;
  if (strict_beta) overrides.strict_beta_claim = true;

  try {
    sgdlab::ExperimentConfig config = sgdlab::load_config(config_path);
    sgdlab::apply_overrides(config, overrides);
    const sgdlab::CommandResult result = sgdlab::run_command(sub->get_name(), config);
    result.write(config.out_dir);
    for (const auto& msg : result.messages) std::cerr << msg << '\n';
    std::cout << "wrote " << (config.out_dir / (result.command + ".csv")).string() << '\n';
    return as_int(result.status);
  } catch (const sgdlab::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return as_int(sgdlab::ExitCode::kConfigError);
  } catch (const sgdlab::DivergenceError& e) {
    std::cerr << "diverged: " << e.what() << " (step " << e.step() << ")\n";
    return as_int(sgdlab::ExitCode::kDivergence);
  } catch (const sgdlab::InvariantError& e) {
    std::cerr << "invariant failure: " << e.what() << '\n';
    return as_int(sgdlab::ExitCode::kInvariantFailure);
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return as_int(sgdlab::ExitCode::kConfigError);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
