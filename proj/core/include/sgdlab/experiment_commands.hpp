#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sgdlab/bounds.hpp"
#include "sgdlab/experiment_config.hpp"
#include "sgdlab/table.hpp"

namespace sgdlab {

enum class ExitCode : int {
  kOk = 0,
  kConfigError = 2,
  kInvariantFailure = 3,
  kDivergence = 4,
};

/// Command-line overrides applied on top of a loaded config.
struct CommandOverrides {
  std::optional<std::filesystem::path> out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<OracleMode> oracle;
  std::optional<std::size_t> replicates;
  std::optional<std::size_t> threads;
  std::optional<bool> strict_beta_claim;
};

void apply_overrides(ExperimentConfig& config, const CommandOverrides& overrides);

/// A command's output tables and exit status. `table` is written as
/// `<out>/<command>.*`; each extra table under its own stem.
struct CommandResult {
  std::string command;
  Table table;
  std::vector<std::pair<std::string, Table>> extras;
  ExitCode status = ExitCode::kOk;
  std::vector<std::string> messages;

  void write(const std::filesystem::path& out_dir) const;
};

/// Whether the exact second-moment oracle is used for (model, cfg): always
/// when forced, never for mis-specified noise, otherwise when d <= 256 and
/// (s+N) d <= 1e11.
bool use_oracle(OracleMode mode, const RegressionModel& model, const SgdConfig& cfg);

/// Risk of one configuration by whichever route `use_oracle` selects.
struct RiskPoint {
  double risk = 0.0;
  double std_err = 0.0;
  std::optional<double> bias;      ///< oracle only
  std::optional<double> variance;  ///< oracle only
  std::string source;  ///< "oracle" or "monte_carlo"
  bool diverged = false;
};

RiskPoint evaluate_risk(const RegressionModel& model, const SgdConfig& cfg,
                        OracleMode mode, std::size_t replicates, std::size_t threads);

/// Least-squares slope of log(value) against log(n) over the largest half of
/// the grid (ceil(len/2) points). Non-finite or non-positive values are
/// dropped before the half is taken.
struct SlopeFit {
  std::size_t points = 0;
  double slope = 0.0;
  double intercept = 0.0;
  bool valid = false;
};

SlopeFit fit_upper_half_slope(std::span<const double> n, std::span<const double> value);

/// Which closed-form rate the configured spectrum family follows, if any.
std::optional<std::pair<RateCase, RateCaseParams>> rate_case_for(const ExperimentConfig& config);

struct RiskSummary {
  double mean = 0.0;
  double std_err = 0.0;
  double median = 0.0;
  std::size_t replicates = 0;
  std::size_t diverged = 0;
};

/// Monte Carlo excess risks at sample size N = cfg.n_samples: streaming SGD,
/// min-norm least squares and ridge fitted on a fresh N-example sample per
/// replicate, and the zero predictor. Replicates run in parallel and are
/// combined in index order.
struct EstimatorComparison {
  RiskSummary sgd;
  RiskSummary min_norm;
  std::vector<RiskSummary> ridge;  ///< one per entry of `ridge_lambdas`
  double zero_predictor = 0.0;
};

EstimatorComparison compare_estimators(const RegressionModel& model, const SgdConfig& cfg,
                                       std::span<const double> ridge_lambdas,
                                       std::size_t replicates, std::size_t threads);

CommandResult cmd_bounds(const ExperimentConfig& config);
CommandResult cmd_verify(const ExperimentConfig& config);
CommandResult cmd_sweep(const ExperimentConfig& config);
CommandResult cmd_compare(const ExperimentConfig& config);

/// Dispatches on "bounds", "verify", "sweep" or "compare"; throws
/// std::invalid_argument for anything else.
CommandResult run_command(std::string_view name, const ExperimentConfig& config);

/// Pinned header rows.
const std::vector<std::string>& bounds_columns();
const std::vector<std::string>& verify_columns();
const std::vector<std::string>& sweep_columns();
const std::vector<std::string>& sweep_fit_columns();
const std::vector<std::string>& compare_columns();

}  // namespace sgdlab
