#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sgdlab/baselines.hpp"
#include "sgdlab/distribution.hpp"
#include "sgdlab/sgd_engine.hpp"
#include "sgdlab/spectrum.hpp"

namespace sgdlab {

/// Malformed or inconsistent experiment configuration. The message starts
/// with the offending field path (e.g. "sgd.gamma: ...") or parse location.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// How the dimension is chosen for a given sample count N.
struct DimensionRule {
  enum class Kind { kFixed, kPower, kPerSample };
  Kind kind = Kind::kFixed;
  double value = 1.0;  ///< d, q (d = ceil(N^q)), or factor (d = factor * N)

  std::size_t resolve(std::size_t n) const;
};

struct SpectrumSpec {
  SpectrumFamily family = SpectrumFamily::kPowerLaw;
  SpectrumParams params;
  DimensionRule dim;
  /// Piecewise head size is ceil(N^head_exponent) when set, else params.head.
  std::optional<double> head_exponent;
};

/// Named vector patterns: zeros, ones, first_coordinate (e_1), uniform_tail
/// (equal weights on the last ceil(d/2) coordinates, unit l2 norm), or an
/// explicit list. `scale` multiplies the pattern.
struct VectorSpec {
  enum class Pattern { kZeros, kOnes, kFirstCoordinate, kUniformTail, kExplicit };
  Pattern pattern = Pattern::kZeros;
  std::vector<double> values;
  double scale = 1.0;

  Vector build(std::size_t dim) const;
};

struct ModelSpec {
  SpectrumSpec spectrum;
  VectorSpec w_star{VectorSpec::Pattern::kOnes, {}, 1.0};
  double noise_std = 1.0;
  bool well_specified = true;
};

struct GammaSpec {
  enum class Rule { kExplicit, kLargeStep, kInverseTrace };
  Rule rule = Rule::kInverseTrace;
  double value = 6.0;  ///< gamma itself, or c in gamma = 1/(c tr H)
};

struct TailSpec {
  enum class Rule { kFixed, kHalf, kFull };
  Rule rule = Rule::kFixed;
  std::size_t value = 0;

  std::size_t resolve(std::size_t n) const;
};

struct SgdSpec {
  GammaSpec gamma;
  std::vector<std::size_t> n_list;
  TailSpec tail;
  VectorSpec w0;
};

enum class OracleMode { kAuto, kForceOracle, kForceMonteCarlo };

struct RunSpec {
  std::size_t replicates = 200;
  std::uint64_t seed = 0;
  OracleMode oracle = OracleMode::kAuto;
  double alpha = 3.0;
  double beta = 1.0;
  std::size_t moment_trials = 100;
  std::size_t order_steps = 1000;   ///< horizon cap for the PSD-order chains
  bool strict_beta_claim = false;   ///< make the beta = 2 check fail `verify`
  std::vector<double> ridge_lambdas;
  RidgeConstants ridge;
  double ols_b = 1.0;
  double ols_c = 1.0;
  std::size_t threads = 0;          ///< 0 = hardware concurrency
};

struct ExperimentConfig {
  ModelSpec model;
  SgdSpec sgd;
  RunSpec run;
  std::filesystem::path out_dir = "out";

  RegressionModel model_for(std::size_t n) const;
  /// SGD settings at sample count n; `tail` selects whether the tail rule
  /// applies (otherwise s = 0).
  SgdConfig sgd_for(const RegressionModel& model, std::size_t n, bool tail) const;
  std::size_t threads() const;
};

ExperimentConfig parse_config(const nlohmann::json& doc);

/// Parses YAML (or JSON, which is valid YAML) text.
ExperimentConfig parse_config_text(const std::string& text);

/// Loads `path`; `.json` files go through the JSON parser, anything else is
/// read as YAML.
ExperimentConfig load_config(const std::filesystem::path& path);

}  // namespace sgdlab
