#include "sgdlab/distribution.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace sgdlab {

RegressionModel::RegressionModel(Spectrum spectrum, Vector w_star,
                                 double noise_std, bool well_specified)
    : spectrum_(std::move(spectrum)),
      w_star_(std::move(w_star)),
      noise_std_(noise_std),
      well_specified_(well_specified) {
  if (static_cast<std::size_t>(w_star_.size()) != spectrum_.dim()) {
    throw std::invalid_argument("model: w_star dimension does not match spectrum");
  }
  if (!(noise_std_ >= 0.0) || !std::isfinite(noise_std_)) {
    throw std::invalid_argument("model: noise_std must be finite and >= 0");
  }
  if (!w_star_.allFinite()) throw std::invalid_argument("model: w_star must be finite");
}

double RegressionModel::noise_level() const noexcept {
  const double s2 = noise_std_ * noise_std_;
  if (well_specified_) return s2;
  const double d = static_cast<double>(dim());
  return s2 * (d + 2.0) / d;
}

Vector RegressionModel::noise_covariance_diag() const {
  return noise_level() * spectrum_.values();
}

ExampleSampler::ExampleSampler(const RegressionModel& model)
    : model_(&model), scale_(model.spectrum().values().cwiseSqrt()) {}

double ExampleSampler::draw(Rng& rng, Vector& x) {
  const Eigen::Index d = scale_.size();
  x.resize(d);
  double z_norm_sq = 0.0;
  for (Eigen::Index i = 0; i < d; ++i) {
    const double z = normal_(rng);
    z_norm_sq += z * z;
    x[i] = scale_[i] * z;
  }
  const double eps = normal_(rng);
  double noise = model_->noise_std() * eps;
  if (!model_->well_specified()) {
    noise *= std::sqrt(z_norm_sq / static_cast<double>(d));
  }
  return noise;
}

Example sample_example(const RegressionModel& model, Rng& rng) {
  ExampleSampler sampler(model);
  Example ex;
  const double noise = sampler.draw(rng, ex.x);
  ex.y = model.w_star().dot(ex.x) + noise;
  return ex;
}

Matrix sandwich(const Spectrum& spec, const Matrix& a) {
  const auto& l = spec.values();
  return l.asDiagonal() * a * l.asDiagonal();
}

Matrix fourth_moment_apply(const Spectrum& spec, const Matrix& a) {
  if (static_cast<std::size_t>(a.rows()) != spec.dim()) {
    throw std::invalid_argument("fourth_moment_apply: dimension mismatch");
  }
  require_symmetric(a, "fourth_moment_apply");
  const auto& l = spec.values();
  const double tr_ha = l.dot(a.diagonal());
  Matrix out = 2.0 * sandwich(spec, a);
  out.diagonal() += tr_ha * l;
  return out;
}

MomentProbe probe_moment_constants(const Spectrum& spec, const Matrix& a) {
  const auto& l = spec.values();
  const double tr_ha = l.dot(a.diagonal());
  if (!(tr_ha > 0.0)) throw std::invalid_argument("probe_moment_constants: tr(HA) must be > 0");
  const Vector inv_sqrt = l.cwiseSqrt().cwiseInverse();
  const Matrix m = fourth_moment_apply(spec, a);
  const Matrix upper = inv_sqrt.asDiagonal() * m * inv_sqrt.asDiagonal();
  const Matrix lower =
      inv_sqrt.asDiagonal() * (m - sandwich(spec, a)) * inv_sqrt.asDiagonal();
  return {max_eigenvalue(upper) / tr_ha, min_eigenvalue(lower) / tr_ha};
}

MomentConstants verify_moment_constants(const RegressionModel& model,
                                        std::size_t trials, Rng& rng) {
  if (trials < 1) throw std::invalid_argument("verify_moment_constants: trials must be >= 1");
  const Spectrum& spec = model.spectrum();
  const auto d = static_cast<Eigen::Index>(spec.dim());

  MomentConstants out;
  out.alpha = -std::numeric_limits<double>::infinity();
  out.beta = std::numeric_limits<double>::infinity();
  auto probe = [&](const Matrix& a) {
    const MomentProbe p = probe_moment_constants(spec, a);
    out.alpha = std::max(out.alpha, p.alpha);
    out.beta = std::min(out.beta, p.beta);
    ++out.tested;
  };

  const Matrix identity = Matrix::Identity(d, d);
  probe(identity);
  for (Eigen::Index i = 0; i < d; ++i) {
    Matrix projector = Matrix::Zero(d, d);
    projector(i, i) = 1.0;
    probe(projector);
  }
  std::normal_distribution<double> normal;
  for (std::size_t t = 0; t < trials; ++t) {
    Matrix g(d, d);
    for (Eigen::Index j = 0; j < d; ++j) {
      for (Eigen::Index i = 0; i < d; ++i) g(i, j) = normal(rng);
    }
    probe(g * g.transpose());
  }

  // M∘I = (tr H + 2 lambda_i) lambda_i on the diagonal, so the ratio is exact.
  const Vector inv_sqrt = spec.values().cwiseSqrt().cwiseInverse();
  const Matrix m_identity = fourth_moment_apply(spec, identity);
  out.r_squared =
      max_eigenvalue(inv_sqrt.asDiagonal() * m_identity * inv_sqrt.asDiagonal());
  out.sigma_sq = model.noise_level();
  return out;
}

BetaClaimCheck check_beta_claim(const Spectrum& spec, double claimed_beta) {
  const auto d = static_cast<Eigen::Index>(spec.dim());
  const auto& l = spec.values();
  BetaClaimCheck out;
  out.claimed_beta = claimed_beta;
  out.worst_margin = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < d; ++i) {
    Matrix a = Matrix::Zero(d, d);
    a(i, i) = 1.0;
    const double tr_ha = l[i];
    Matrix diff = fourth_moment_apply(spec, a) - sandwich(spec, a);
    diff.diagonal() -= claimed_beta * tr_ha * l;
    const double scale = std::max(max_abs_entry(diff), claimed_beta * tr_ha * l.maxCoeff());
    const double margin = psd_margin(diff, scale);
    if (margin < out.worst_margin) {
      out.worst_margin = margin;
      out.worst_index = static_cast<std::size_t>(i);
    }
  }
  out.holds = out.worst_margin >= -kPsdTolerance;
  return out;
}

double excess_risk(const RegressionModel& model, const Vector& w) {
  if (w.size() != model.w_star().size()) {
    throw std::invalid_argument("excess_risk: dimension mismatch");
  }
  const auto& l = model.spectrum().values();
  CompensatedSum sum;
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    const double delta = w[i] - model.w_star()[i];
    sum += l[i] * delta * delta;
  }
  return 0.5 * sum.value();
}

}  // namespace sgdlab
