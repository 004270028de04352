#include "sgdlab/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

namespace sgdlab {

std::string_view to_string(SpectrumFamily family) {
  switch (family) {
    case SpectrumFamily::kPiecewise: return "piecewise";
    case SpectrumFamily::kPowerLaw: return "power_law";
    case SpectrumFamily::kLogPoly: return "log_poly";
    case SpectrumFamily::kExponential: return "exponential";
    case SpectrumFamily::kExplicit: return "explicit";
  }
  return "unknown";
}

std::optional<SpectrumFamily> parse_spectrum_family(std::string_view tag) {
  for (auto family : {SpectrumFamily::kPiecewise, SpectrumFamily::kPowerLaw,
                      SpectrumFamily::kLogPoly, SpectrumFamily::kExponential,
                      SpectrumFamily::kExplicit}) {
    if (to_string(family) == tag) return family;
  }
  return std::nullopt;
}

Spectrum::Spectrum(std::vector<double> lambdas) {
  if (lambdas.empty()) throw std::invalid_argument("spectrum: empty eigenvalue list");
  for (double v : lambdas) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw std::invalid_argument("spectrum: eigenvalues must be positive and finite");
    }
  }
  std::stable_sort(lambdas.begin(), lambdas.end(), std::greater<>());
  lambdas_ = Eigen::Map<const Vector>(lambdas.data(), static_cast<Eigen::Index>(lambdas.size()));
  CompensatedSum sum;
  for (double v : lambdas) sum += v;
  trace_ = sum.value();
}

Spectrum Spectrum::build(SpectrumFamily family, const SpectrumParams& params,
                         std::size_t dim) {
  if (dim == 0) throw std::invalid_argument("spectrum: dimension must be >= 1");
  std::vector<double> lambdas(dim);
  switch (family) {
    case SpectrumFamily::kPiecewise: {
      const std::size_t s = params.head;
      if (s < 1 || s > dim) {
        throw std::invalid_argument("spectrum: piecewise head size must be in [1, d]");
      }
      for (std::size_t k = 0; k < dim; ++k) {
        lambdas[k] = k < s ? 1.0 / static_cast<double>(s)
                           : 1.0 / static_cast<double>(dim - s);
      }
      break;
    }
    case SpectrumFamily::kPowerLaw:
      if (!(params.r > 0.0)) throw std::invalid_argument("spectrum: power_law needs r > 0");
      for (std::size_t k = 0; k < dim; ++k) {
        lambdas[k] = std::pow(static_cast<double>(k + 1), -(1.0 + params.r));
      }
      break;
    case SpectrumFamily::kLogPoly:
      if (!(params.beta > 1.0)) throw std::invalid_argument("spectrum: log_poly needs beta > 1");
      for (std::size_t k = 0; k < dim; ++k) {
        const double kk = static_cast<double>(k + 1);
        lambdas[k] = 1.0 / (kk * std::pow(std::log(kk + 1.0), params.beta));
      }
      break;
    case SpectrumFamily::kExponential:
      for (std::size_t k = 0; k < dim; ++k) {
        lambdas[k] = std::exp(-static_cast<double>(k + 1));
      }
      break;
    case SpectrumFamily::kExplicit:
      if (params.values.size() != dim) {
        throw std::invalid_argument("spectrum: explicit list length does not match d");
      }
      lambdas = params.values;
      break;
  }
  return Spectrum(std::move(lambdas));
}

std::size_t effective_dim(const Spectrum& spec, double gamma, double horizon) {
  if (!(gamma > 0.0)) throw std::invalid_argument("effective_dim: gamma must be > 0");
  if (!(horizon >= 1.0)) throw std::invalid_argument("effective_dim: horizon must be >= 1");
  const double threshold = 1.0 / (gamma * horizon);
  // Sorted non-increasing: count the prefix meeting the threshold.
  const auto& v = spec.values();
  const auto it = std::partition_point(v.begin(), v.end(),
                                       [&](double l) { return l >= threshold; });
  return static_cast<std::size_t>(it - v.begin());
}

double tail_power_sum(const Spectrum& spec, std::size_t k, int p) {
  if (k > spec.dim()) throw std::out_of_range("tail_power_sum: k exceeds dimension");
  if (p < 1) throw std::invalid_argument("tail_power_sum: p must be >= 1");
  CompensatedSum sum;
  for (std::size_t i = spec.dim(); i-- > k;) {
    const double l = spec[i];
    sum += p == 1 ? l : p == 2 ? l * l : std::pow(l, p);
  }
  return sum.value();
}

SplitNorms split_norms(const Spectrum& spec, const Vector& v, std::size_t k) {
  if (static_cast<std::size_t>(v.size()) != spec.dim()) {
    throw std::invalid_argument("split_norms: vector dimension mismatch");
  }
  if (k > spec.dim()) throw std::out_of_range("split_norms: k exceeds dimension");
  CompensatedSum head;
  CompensatedSum tail;
  for (std::size_t i = 0; i < spec.dim(); ++i) {
    const double vi = v[static_cast<Eigen::Index>(i)];
    if (i < k) {
      head += vi * vi / spec[i];
    } else {
      tail += spec[i] * vi * vi;
    }
  }
  return {head.value(), tail.value()};
}

}  // namespace sgdlab
