#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

#include "sgdlab/distribution.hpp"
#include "sgdlab/sgd_engine.hpp"

namespace sgdlab {

/// Which closed-form risk bound a report holds.
enum class BoundKind {
  kUpper,       ///< iterate averaging, upper bound
  kLower,       ///< iterate averaging, lower bound
  kLargeStep,   ///< upper bound at gamma = 1/(2 alpha tr H)
  kCrude,       ///< crude O(1/N) bias bound at gamma = 1/(2 alpha tr H)
  kTailUpper,   ///< tail averaging, upper bound
  kTailLower,   ///< tail averaging, lower bound
};

std::string_view to_string(BoundKind kind);

/// Upper bounds satisfy total = 2 (effective_bias + effective_var); lower
/// bounds report the sum of their four terms, with the first two in
/// effective_bias.
struct BoundReport {
  BoundKind kind = BoundKind::kUpper;
  double gamma = 0.0;
  std::size_t n_samples = 0;
  std::size_t tail_start = 0;
  double effective_bias = 0.0;
  double effective_var = 0.0;
  double total = 0.0;
  std::size_t k_star = 0;
  std::optional<std::size_t> k_dagger;
  bool admissible = true;
  std::string reason;  ///< why the configuration is inadmissible, empty otherwise
};

inline constexpr double kGaussianAlpha = 3.0;
/// Largest beta that holds for every Gaussian model (see check_beta_claim).
inline constexpr double kGaussianBeta = 1.0;
inline constexpr std::size_t kLowerBoundMinSamples = 500;

/// Requires gamma <= 1/(alpha tr H); otherwise the report is flagged
/// inadmissible and values are still computed.
BoundReport upper_bound(const RegressionModel& model, const SgdConfig& cfg,
                        double alpha = kGaussianAlpha);

/// Requires a well-specified model, N >= 500 and gamma < 1/lambda_1.
BoundReport lower_bound(const RegressionModel& model, const SgdConfig& cfg,
                        double beta = kGaussianBeta);

/// The large stepsize 1/(2 alpha tr H).
double large_step_gamma(const Spectrum& spec, double alpha = kGaussianAlpha);

/// Evaluates kLargeStep or kCrude at gamma = large_step_gamma; `cfg.gamma`
/// is ignored and the derived stepsize is returned in the report.
BoundReport corollary_bound(const RegressionModel& model, const SgdConfig& cfg,
                            BoundKind which, double alpha = kGaussianAlpha);

BoundReport tail_upper_bound(const RegressionModel& model, const SgdConfig& cfg,
                             double alpha = kGaussianAlpha);

BoundReport tail_lower_bound(const RegressionModel& model, const SgdConfig& cfg,
                             double beta = kGaussianBeta);

/// Example spectra with a known asymptotic risk order.
enum class RateCase {
  kPiecewise,    ///< O(N^{r-1} + N^{1-q})
  kPowerLaw,     ///< O(N^{-r/(1+r)})
  kLogPoly,      ///< O(log^{-beta} N)
  kExponential,  ///< O(log N / N)
};

struct RateCaseParams {
  double r = 1.0;
  double q = 1.0;     ///< piecewise: d = N^q; ignored when dim_fixed
  double beta = 2.0;
  bool dim_fixed = false;  ///< piecewise at a fixed d: the N^{1-q} term is dropped
};

struct RatePrediction {
  std::string form;           ///< human-readable order, e.g. "N^-0.5"
  std::optional<double> exponent;  ///< log-log slope when the order is a power of N
  double value = 0.0;         ///< the order evaluated at n (no constants)
};

RatePrediction rate_prediction(RateCase which, const RateCaseParams& params, double n);

}  // namespace sgdlab
