#include "sgdlab/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include "sgdlab/spectrum.hpp"

namespace sgdlab {

void DesignSample::validate() const {
  if (features.rows() != labels.size()) {
    throw std::invalid_argument("design: row count does not match label count");
  }
  if (!features.allFinite() || !labels.allFinite()) {
    throw std::invalid_argument("design: non-finite entries");
  }
}

DesignSample draw_sample(const RegressionModel& model, std::size_t n, Rng& rng) {
  const auto d = static_cast<Eigen::Index>(model.dim());
  DesignSample sample{Matrix(static_cast<Eigen::Index>(n), d),
                      Vector(static_cast<Eigen::Index>(n))};
  ExampleSampler sampler(model);
  Vector x(d);
  for (Eigen::Index t = 0; t < static_cast<Eigen::Index>(n); ++t) {
    const double noise = sampler.draw(rng, x);
    sample.features.row(t) = x.transpose();
    sample.labels[t] = model.w_star().dot(x) + noise;
  }
  return sample;
}

namespace {

constexpr double kPinvCutoff = 1e-12;
// A Cholesky solve of the Gram system is accepted when its reciprocal
// condition estimate keeps the squared singular values well inside double
// precision; otherwise the rank-revealing path takes over.
constexpr double kGramRcondFloor = 1e-10;

Vector min_norm_rank_revealing(const DesignSample& sample) {
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod;
  cod.setThreshold(kPinvCutoff);
  cod.compute(sample.features);
  return cod.solve(sample.labels);
}

}  // namespace

Vector fit_min_norm(const DesignSample& sample) {
  sample.validate();
  const Matrix& x = sample.features;
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  if (n == 0) return Vector::Zero(d);

  if (n <= d) {
    // Underdetermined: w = X^T (X X^T)^{-1} y.
    Matrix gram = Matrix::Zero(n, n);
    gram.selfadjointView<Eigen::Lower>().rankUpdate(x);
    Eigen::LLT<Matrix> llt(gram.selfadjointView<Eigen::Lower>());
    if (llt.info() == Eigen::Success && llt.rcond() > kGramRcondFloor) {
      return x.transpose() * llt.solve(sample.labels);
    }
  }
  return min_norm_rank_revealing(sample);
}

Vector fit_ridge(const DesignSample& sample, double lambda_reg) {
  sample.validate();
  if (!(lambda_reg > 0.0)) throw std::invalid_argument("fit_ridge: lambda must be > 0");
  const Matrix& x = sample.features;
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  if (n < d) {
    Matrix gram = Matrix::Zero(n, n);
    gram.selfadjointView<Eigen::Lower>().rankUpdate(x);
    gram.diagonal().array() += lambda_reg;
    Eigen::LDLT<Matrix> ldlt(gram.selfadjointView<Eigen::Lower>());
    return x.transpose() * ldlt.solve(sample.labels);
  }
  Matrix gram = Matrix::Zero(d, d);
  gram.selfadjointView<Eigen::Lower>().rankUpdate(x.transpose());
  gram.diagonal().array() += lambda_reg;
  Eigen::LDLT<Matrix> ldlt(gram.selfadjointView<Eigen::Lower>());
  return ldlt.solve(x.transpose() * sample.labels);
}

std::optional<OlsComparator> ols_lower_bound(const Spectrum& spec, std::size_t n,
                                             double sigma_sq, double b, double c) {
  if (!(b > 0.0) || !(c > 0.0)) throw std::invalid_argument("ols_lower_bound: b, c must be > 0");
  if (n < 1) throw std::invalid_argument("ols_lower_bound: n must be >= 1");
  const double nn = static_cast<double>(n);
  for (std::size_t k = 0; k < spec.dim(); ++k) {
    const double tail = tail_power_sum(spec, k, 1);
    if (tail / spec[k] >= b * nn) {
      const double tail_sq = tail_power_sum(spec, k, 2);
      return OlsComparator{
          k, c * sigma_sq * (static_cast<double>(k) / nn + nn * tail_sq / (tail * tail))};
    }
  }
  return std::nullopt;
}

RidgeComparator ridge_bounds(const Spectrum& spec, std::size_t n, double sigma_sq,
                             double lambda_reg, const Vector& w_star,
                             const RidgeConstants& k) {
  if (static_cast<std::size_t>(w_star.size()) != spec.dim()) {
    throw std::invalid_argument("ridge_bounds: w_star dimension mismatch");
  }
  if (n < 1) throw std::invalid_argument("ridge_bounds: n must be >= 1");
  const double nn = static_cast<double>(n);
  const std::size_t d = spec.dim();
  RidgeComparator out;

  // Lower display, maximized over k = 0..d-1 (lambda_{k+1} must exist).
  out.lower = -1.0;
  for (std::size_t kk = 0; kk < d; ++kk) {
    const double next = spec[kk];
    const double rho = (lambda_reg + tail_power_sum(spec, kk, 1)) / (nn * next);
    CompensatedSum bias;
    CompensatedSum var;
    for (std::size_t i = 0; i < d; ++i) {
      const double l = spec[i];
      const double w = w_star[static_cast<Eigen::Index>(i)];
      const double shrink = 1.0 + l / (next * rho);
      bias += l * w * w / (shrink * shrink);
      const double ratio = l / (next * (rho + 2.0));
      var += std::min(1.0, ratio * ratio);
    }
    const double value = k.c1 * bias.value() + sigma_sq * k.c2 / nn * var.value();
    if (value > out.lower) {
      out.lower = value;
      out.lower_k = kk;
    }
  }

  // Upper display at k* = min{k : (sum_{i>k} lambda_i + lambda) / lambda_{k+1} >= b N}.
  out.k_star = d;
  for (std::size_t kk = 0; kk < d; ++kk) {
    if ((tail_power_sum(spec, kk, 1) + lambda_reg) / spec[kk] >= k.b * nn) {
      out.k_star = kk;
      break;
    }
  }
  const SplitNorms norms = split_norms(spec, w_star, out.k_star);
  const double shifted_tail = lambda_reg + tail_power_sum(spec, out.k_star, 1);
  const double tail_sq = tail_power_sum(spec, out.k_star, 2);
  out.upper =
      k.c1_upper * (norms.head * std::pow(shifted_tail / nn, 2) + norms.tail) +
      k.c2_upper * sigma_sq *
          (static_cast<double>(out.k_star) / nn + nn * tail_sq / (shifted_tail * shifted_tail));
  return out;
}

}  // namespace sgdlab
