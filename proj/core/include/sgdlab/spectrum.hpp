#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sgdlab/numerics.hpp"

namespace sgdlab {

/// Eigenvalue families that can be instantiated at any dimension.
enum class SpectrumFamily {
  kPiecewise,    ///< 1/s on the first s coordinates, 1/(d-s) on the rest
  kPowerLaw,     ///< k^-(1+r)
  kLogPoly,      ///< k^-1 log^-beta(k+1)
  kExponential,  ///< e^-k
  kExplicit,     ///< user-supplied list
};

/// Config-file tag for a family ("piecewise", "power_law", ...).
std::string_view to_string(SpectrumFamily family);
std::optional<SpectrumFamily> parse_spectrum_family(std::string_view tag);

struct SpectrumParams {
  double r = 1.0;                ///< power-law exponent offset
  double beta = 2.0;             ///< log-poly exponent
  std::size_t head = 1;          ///< piecewise head size s
  std::vector<double> values;    ///< explicit eigenvalues
};

/// Eigenvalues of the feature covariance H, sorted non-increasing. H is
/// diagonal in the working basis, so coordinate i of any vector is its
/// component along the i-th eigenvector.
class Spectrum {
 public:
  /// Stable-sorts `lambdas` non-increasing. Throws std::invalid_argument on an
  /// empty list or any non-positive / non-finite eigenvalue.
  explicit Spectrum(std::vector<double> lambdas);

  static Spectrum build(SpectrumFamily family, const SpectrumParams& params,
                        std::size_t dim);

  std::size_t dim() const noexcept { return static_cast<std::size_t>(lambdas_.size()); }
  double operator[](std::size_t i) const { return lambdas_[static_cast<Eigen::Index>(i)]; }
  double largest() const { return lambdas_[0]; }
  double trace() const noexcept { return trace_; }
  const Vector& values() const noexcept { return lambdas_; }

 private:
  Vector lambdas_;
  double trace_ = 0.0;
};

/// Number of eigenvalues with lambda_k >= 1/(gamma * horizon). Since the
/// spectrum is sorted this is max{k : lambda_k >= threshold}, or 0.
std::size_t effective_dim(const Spectrum& spec, double gamma, double horizon);

/// sum_{i>k} lambda_i^p (1-based k; k = 0 is the full sum, k = d is 0).
double tail_power_sum(const Spectrum& spec, std::size_t k, int p);

struct SplitNorms {
  double head = 0.0;  ///< sum_{i<=k} v_i^2 / lambda_i
  double tail = 0.0;  ///< sum_{i>k} lambda_i v_i^2
};

SplitNorms split_norms(const Spectrum& spec, const Vector& v, std::size_t k);

}  // namespace sgdlab
