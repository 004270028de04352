#pragma once

#include <cstddef>
#include <optional>

#include "sgdlab/distribution.hpp"

namespace sgdlab {

/// N training examples: rows of `features` are x_t^T.
struct DesignSample {
  Matrix features;
  Vector labels;

  /// Throws std::invalid_argument on a row/label count mismatch or
  /// non-finite entries.
  void validate() const;
};

DesignSample draw_sample(const RegressionModel& model, std::size_t n, Rng& rng);

/// Minimum-l2-norm least-squares solution X^+ y. Works for N < d and N >= d;
/// rank-deficient designs are handled by a pseudo-inverse that drops
/// singular values below 1e-12 sigma_max.
Vector fit_min_norm(const DesignSample& sample);

/// Solves (X^T X + lambda I) w = X^T y (through the N x N dual system when
/// N < d). Requires lambda > 0.
Vector fit_ridge(const DesignSample& sample, double lambda_reg);

/// Order-of-magnitude comparators with unspecified absolute constants; they are
/// not certified bounds.
struct OlsComparator {
  std::size_t k_star = 0;
  double value = 0.0;
};

/// c sigma^2 (k/N + N sum_{i>k} lambda_i^2 / (sum_{i>k} lambda_i)^2) with
/// k = min{k >= 0 : sum_{i>k} lambda_i / lambda_{k+1} >= b N}.
/// std::nullopt when no such k < d exists.
std::optional<OlsComparator> ols_lower_bound(const Spectrum& spec, std::size_t n,
                                             double sigma_sq, double b = 1.0,
                                             double c = 1.0);

struct RidgeConstants {
  double b = 1.0;
  double c1 = 1.0;
  double c2 = 1.0;
  double c1_upper = 1.0;
  double c2_upper = 1.0;
};

struct RidgeComparator {
  double lower = 0.0;
  double upper = 0.0;
  std::size_t lower_k = 0;  ///< maximizing k of the lower display
  std::size_t k_star = 0;   ///< k used by the upper display (d when none qualifies)
};

RidgeComparator ridge_bounds(const Spectrum& spec, std::size_t n, double sigma_sq,
                             double lambda_reg, const Vector& w_star,
                             const RidgeConstants& constants = {});

}  // namespace sgdlab
