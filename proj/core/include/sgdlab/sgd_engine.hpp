#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

#include "sgdlab/distribution.hpp"

namespace sgdlab {

/// Constant-stepsize SGD run. The output is the average of the N iterates
/// w_s, ..., w_{s+N-1}; s = 0 gives plain iterate averaging (w_0 included).
struct SgdConfig {
  double gamma = 0.0;
  std::size_t n_samples = 1;
  std::size_t tail_start = 0;
  Vector w0;
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument on gamma <= 0, N = 0 or a w0 of the wrong size.
  void validate(std::size_t dim) const;

  /// Index one past the last averaged iterate: s + N.
  std::size_t horizon() const noexcept { return tail_start + n_samples; }
};

struct RiskEstimate {
  double mean = 0.0;
  double std_err = 0.0;
  std::size_t replicates = 0;

  /// Mean and standard error (sample std / sqrt(n)) of the samples, summed in
  /// index order.
  static RiskEstimate from_samples(std::span<const double> samples);
};

/// Random source for replicate r of a run seeded with `seed`.
inline Rng replicate_rng(std::uint64_t seed, std::size_t replicate) {
  return Rng(seed + static_cast<std::uint64_t>(replicate));
}

/// w_t = w_{t-1} + gamma (y_t - <w_{t-1}, x_t>) x_t; returns the averaged iterate.
/// Throws DivergenceError when an iterate stops being finite.
Vector run_sgd(const RegressionModel& model, const SgdConfig& cfg, Rng& rng);

/// Noiseless chain beta_t = (I - gamma x_t x_t^T) beta_{t-1}, beta_0 = w0 - w*.
/// Returns the averaged beta.
Vector run_bias_chain(const RegressionModel& model, const SgdConfig& cfg, Rng& rng);

/// Noise-driven chain beta_t = (I - gamma x_t x_t^T) beta_{t-1} + gamma xi_t x_t
/// started at 0. Requires a well-specified model. Returns the averaged beta.
Vector run_variance_chain(const RegressionModel& model, const SgdConfig& cfg, Rng& rng);

/// Averages of the full SGD path and of the bias and variance chains driven by
/// the same example stream. Per path, full - w* == bias + variance up to
/// rounding.
struct CoupledAverages {
  Vector full;
  Vector bias;
  Vector variance;
};

CoupledAverages run_coupled(const RegressionModel& model, const SgdConfig& cfg, Rng& rng);

/// Monte Carlo estimate of E[L(w_bar)] - L(w*). Replicate r uses seed cfg.seed + r;
/// the result does not depend on `threads`.
RiskEstimate monte_carlo_risk(const RegressionModel& model, const SgdConfig& cfg,
                              std::size_t replicates, std::size_t threads = 1);

struct RiskDecomposition {
  RiskEstimate bias;
  RiskEstimate variance;
};

RiskDecomposition monte_carlo_decomposition(const RegressionModel& model,
                                            const SgdConfig& cfg,
                                            std::size_t replicates,
                                            std::size_t threads = 1);

}  // namespace sgdlab
