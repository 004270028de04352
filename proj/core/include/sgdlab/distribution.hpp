#pragma once

#include <cstddef>
#include <random>

#include "sgdlab/numerics.hpp"
#include "sgdlab/spectrum.hpp"

namespace sgdlab {

using Rng = std::mt19937_64;

/// Gaussian linear model in the eigenbasis of H:
///   x ~ N(0, diag(lambda)),  y = <w*, x> + noise.
///
/// Well-specified noise is sigma * eps with eps ~ N(0,1) independent of x.
/// Mis-specified noise is sigma * eps * g(x) with g(x) = |H^{-1/2} x| / sqrt(d);
/// its gradient-noise covariance is sigma^2 (d+2)/d * H.
class RegressionModel {
 public:
  RegressionModel(Spectrum spectrum, Vector w_star, double noise_std,
                  bool well_specified = true);

  const Spectrum& spectrum() const noexcept { return spectrum_; }
  const Vector& w_star() const noexcept { return w_star_; }
  double noise_std() const noexcept { return noise_std_; }
  bool well_specified() const noexcept { return well_specified_; }
  std::size_t dim() const noexcept { return spectrum_.dim(); }

  /// |H^{-1/2} Sigma H^{-1/2}|_2 for Sigma = E[(y - <w*,x>)^2 x x^T].
  double noise_level() const noexcept;

  /// Diagonal of the gradient-noise covariance Sigma.
  Vector noise_covariance_diag() const;

 private:
  Spectrum spectrum_;
  Vector w_star_;
  double noise_std_;
  bool well_specified_;
};

/// Fourth-moment and noise constants of a model.
struct MomentConstants {
  double alpha = 0.0;      ///< smallest a with M∘A <= a tr(HA) H over tested A
  double beta = 0.0;       ///< largest b with M∘A - HAH >= b tr(HA) H over tested A
  double r_squared = 0.0;  ///< smallest R^2 with M∘I <= R^2 H
  double sigma_sq = 0.0;   ///< noise level
  std::size_t tested = 0;  ///< number of test matrices
};

struct Example {
  Vector x;
  double y = 0.0;
};

/// Streams examples from a model without reallocating. Each draw consumes
/// d standard normals for the features followed by one for the noise.
class ExampleSampler {
 public:
  explicit ExampleSampler(const RegressionModel& model);

  /// Fills `x` and returns the label noise xi = y - <w*, x>.
  double draw(Rng& rng, Vector& x);

 private:
  const RegressionModel* model_;
  Vector scale_;
  std::normal_distribution<double> normal_;
};

Example sample_example(const RegressionModel& model, Rng& rng);

/// Exact Gaussian fourth moment M∘A = E[x x^T A x x^T] = tr(AH) H + 2 HAH.
Matrix fourth_moment_apply(const Spectrum& spec, const Matrix& a);

/// HAH for diagonal H.
Matrix sandwich(const Spectrum& spec, const Matrix& a);

struct MomentProbe {
  double alpha = 0.0;  ///< lambda_max(H^{-1/2} (M∘A) H^{-1/2}) / tr(HA)
  double beta = 0.0;   ///< lambda_min(H^{-1/2} (M∘A - HAH) H^{-1/2}) / tr(HA)
};

/// Tightest fourth-moment constants for a single nonzero PSD test matrix.
MomentProbe probe_moment_constants(const Spectrum& spec, const Matrix& a);

/// Probes the eigenbasis projectors v_i v_i^T, the identity, and `trials`
/// random Gram matrices G G^T (G standard Gaussian).
MomentConstants verify_moment_constants(const RegressionModel& model,
                                        std::size_t trials, Rng& rng);

/// Result of checking M∘A - HAH >= beta tr(HA) H on the eigenbasis projectors.
struct BetaClaimCheck {
  double claimed_beta = 0.0;
  double worst_margin = 0.0;   ///< min normalized PSD margin over projectors
  std::size_t worst_index = 0; ///< 0-based coordinate of the worst projector
  bool holds = true;
};

BetaClaimCheck check_beta_claim(const Spectrum& spec, double claimed_beta);

/// L(w) - L(w*) = 1/2 sum_i lambda_i (w_i - w*_i)^2.
double excess_risk(const RegressionModel& model, const Vector& w);

}  // namespace sgdlab
