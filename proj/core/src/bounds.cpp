#include "sgdlab/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "sgdlab/spectrum.hpp"

namespace sgdlab {

std::string_view to_string(BoundKind kind) {
  switch (kind) {
    case BoundKind::kUpper: return "upper";
    case BoundKind::kLower: return "lower";
    case BoundKind::kLargeStep: return "large_step";
    case BoundKind::kCrude: return "crude";
    case BoundKind::kTailUpper: return "tail_upper";
    case BoundKind::kTailLower: return "tail_lower";
  }
  return "unknown";
}

namespace {

struct Common {
  const Spectrum& spec;
  Vector delta;        // w0 - w*
  double gamma;
  double n;
  double trace;
};

Common common(const RegressionModel& model, const SgdConfig& cfg) {
  cfg.validate(model.dim());
  return {model.spectrum(), cfg.w0 - model.w_star(), cfg.gamma,
          static_cast<double>(cfg.n_samples), model.spectrum().trace()};
}

void flag(BoundReport& report, const std::string& why) {
  report.admissible = false;
  if (!report.reason.empty()) report.reason += "; ";
  report.reason += why;
}

void check_upper_stepsize(BoundReport& report, double gamma, double alpha, double trace) {
  if (gamma > 1.0 / (alpha * trace)) flag(report, "stepsize exceeds 1/(alpha tr H)");
}

void check_lower_admissible(BoundReport& report, const RegressionModel& model,
                            const SgdConfig& cfg) {
  if (!model.well_specified()) flag(report, "model is mis-specified");
  if (cfg.n_samples < kLowerBoundMinSamples) flag(report, "N < 500");
  if (!(cfg.gamma < 1.0 / model.spectrum().largest())) {
    flag(report, "stepsize not below 1/lambda_1");
  }
}

// (I - gamma H)^s v, coordinatewise.
Vector contract_initial(const Spectrum& spec, const Vector& v, double gamma, std::size_t s) {
  Vector out = v;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    out[i] *= std::pow(1.0 - gamma * spec[static_cast<std::size_t>(i)], static_cast<double>(s));
  }
  return out;
}

// sum_{k < i <= k2} lambda_i in 1-based indexing.
double band_sum(const Spectrum& spec, std::size_t k, std::size_t k2) {
  return k2 > k ? tail_power_sum(spec, k, 1) - tail_power_sum(spec, k2, 1) : 0.0;
}

}  // namespace

BoundReport upper_bound(const RegressionModel& model, const SgdConfig& cfg, double alpha) {
  const Common c = common(model, cfg);
  BoundReport r;
  r.kind = BoundKind::kUpper;
  r.gamma = c.gamma;
  r.n_samples = cfg.n_samples;
  check_upper_stepsize(r, c.gamma, alpha, c.trace);

  r.k_star = effective_dim(c.spec, c.gamma, c.n);
  const auto k = static_cast<double>(r.k_star);
  const SplitNorms norms = split_norms(c.spec, c.delta, r.k_star);
  const double tail_sq = tail_power_sum(c.spec, r.k_star, 2);
  const double slack = 1.0 - c.gamma * alpha * c.trace;
  const double sigma_sq = model.noise_level();

  r.effective_bias = norms.head / (c.gamma * c.gamma * c.n * c.n) + norms.tail;
  r.effective_var =
      alpha * c.gamma * c.delta.squaredNorm() / slack *
          (k / (c.n * c.n * c.gamma * c.gamma) + tail_sq) +
      sigma_sq / slack * (k / c.n + c.n * c.gamma * c.gamma * tail_sq);
  r.total = 2.0 * (r.effective_bias + r.effective_var);
  return r;
}

BoundReport lower_bound(const RegressionModel& model, const SgdConfig& cfg, double beta) {
  const Common c = common(model, cfg);
  BoundReport r;
  r.kind = BoundKind::kLower;
  r.gamma = c.gamma;
  r.n_samples = cfg.n_samples;
  check_lower_admissible(r, model, cfg);

  r.k_star = effective_dim(c.spec, c.gamma, c.n);
  const auto k = static_cast<double>(r.k_star);
  const SplitNorms norms = split_norms(c.spec, c.delta, r.k_star);
  const double tail_sq = tail_power_sum(c.spec, r.k_star, 2);
  const double h_norm_sq = split_norms(c.spec, c.delta, 0).tail;
  const double noise_sq = model.noise_std() * model.noise_std();
  const double e3 = std::exp(3.0);

  r.effective_bias =
      norms.head / (16.0 * c.gamma * c.gamma * c.n * c.n) + norms.tail / 16.0;
  r.effective_var =
      beta * c.gamma * h_norm_sq / (128.0 * e3) *
          std::min(1.0 / c.spec.largest(), c.n * c.gamma) * tail_sq +
      noise_sq / 50.0 * (k / c.n + c.n * c.gamma * c.gamma * tail_sq);
  r.total = r.effective_bias + r.effective_var;
  return r;
}

double large_step_gamma(const Spectrum& spec, double alpha) {
  return 1.0 / (2.0 * alpha * spec.trace());
}

BoundReport corollary_bound(const RegressionModel& model, const SgdConfig& cfg,
                            BoundKind which, double alpha) {
  if (which != BoundKind::kLargeStep && which != BoundKind::kCrude) {
    throw std::invalid_argument("corollary_bound: kind must be large_step or crude");
  }
  SgdConfig at_step = cfg;
  at_step.gamma = large_step_gamma(model.spectrum(), alpha);
  const Common c = common(model, at_step);

  BoundReport r;
  r.kind = which;
  r.gamma = c.gamma;
  r.n_samples = cfg.n_samples;
  // k* = max{k : lambda_k >= 2 alpha tr H / N} is the usual k* at this gamma.
  r.k_star = effective_dim(c.spec, c.gamma, c.n);
  const auto k = static_cast<double>(r.k_star);
  const double tail_sq = tail_power_sum(c.spec, r.k_star, 2);
  const double sigma_sq = model.noise_level();
  const double delta_sq = c.delta.squaredNorm();
  const double var_shape =
      k / c.n + c.n * tail_sq / (4.0 * alpha * alpha * c.trace * c.trace);

  if (which == BoundKind::kLargeStep) {
    const SplitNorms norms = split_norms(c.spec, c.delta, r.k_star);
    r.effective_bias =
        4.0 * alpha * alpha * c.trace * c.trace / (c.n * c.n) * norms.head + norms.tail;
    r.effective_var = (2.0 * sigma_sq + alpha * alpha * c.trace * delta_sq / c.n) * var_shape;
  } else {
    // total = 8 alpha |delta|^2 tr H / N + 4 sigma^2 (...), split evenly.
    r.effective_bias = 4.0 * alpha * delta_sq * c.trace / c.n;
    r.effective_var = 2.0 * sigma_sq * var_shape;
  }
  r.total = 2.0 * (r.effective_bias + r.effective_var);
  return r;
}

BoundReport tail_upper_bound(const RegressionModel& model, const SgdConfig& cfg,
                             double alpha) {
  const Common c = common(model, cfg);
  BoundReport r;
  r.kind = BoundKind::kTailUpper;
  r.gamma = c.gamma;
  r.n_samples = cfg.n_samples;
  r.tail_start = cfg.tail_start;
  check_upper_stepsize(r, c.gamma, alpha, c.trace);

  const double horizon = static_cast<double>(cfg.horizon());
  r.k_star = effective_dim(c.spec, c.gamma, c.n);
  r.k_dagger = effective_dim(c.spec, c.gamma, horizon);
  const auto k = static_cast<double>(r.k_star);
  const Vector contracted = contract_initial(c.spec, c.delta, c.gamma, cfg.tail_start);
  const SplitNorms norms = split_norms(c.spec, contracted, r.k_star);
  const double tail_sq = tail_power_sum(c.spec, r.k_star, 2);
  const double far_tail_sq = tail_power_sum(c.spec, *r.k_dagger, 2);
  const double band = band_sum(c.spec, r.k_star, *r.k_dagger);
  const double slack = 1.0 - c.gamma * alpha * c.trace;
  const double sigma_sq = model.noise_level();

  r.effective_bias = norms.head / (c.gamma * c.gamma * c.n * c.n) + norms.tail;
  r.effective_var =
      2.0 * alpha * c.gamma * c.delta.squaredNorm() / slack *
          (k / (c.n * c.n * c.gamma * c.gamma) + tail_sq) +
      sigma_sq / slack *
          (k / c.n + c.gamma * band + c.gamma * c.gamma * horizon * far_tail_sq);
  r.total = 2.0 * (r.effective_bias + r.effective_var);
  return r;
}

BoundReport tail_lower_bound(const RegressionModel& model, const SgdConfig& cfg,
                             double beta) {
  const Common c = common(model, cfg);
  BoundReport r;
  r.kind = BoundKind::kTailLower;
  r.gamma = c.gamma;
  r.n_samples = cfg.n_samples;
  r.tail_start = cfg.tail_start;
  check_lower_admissible(r, model, cfg);

  const double horizon = static_cast<double>(cfg.horizon());
  const double s = static_cast<double>(cfg.tail_start);
  r.k_star = effective_dim(c.spec, c.gamma, c.n);
  r.k_dagger = effective_dim(c.spec, c.gamma, horizon);
  const auto k = static_cast<double>(r.k_star);
  const Vector contracted = contract_initial(c.spec, c.delta, c.gamma, cfg.tail_start);
  const SplitNorms norms = split_norms(c.spec, contracted, r.k_star);
  const double far_tail_sq = tail_power_sum(c.spec, *r.k_dagger, 2);
  const double band = band_sum(c.spec, r.k_star, *r.k_dagger);
  const double h_norm_sq = split_norms(c.spec, c.delta, 0).tail;
  const double noise_sq = model.noise_std() * model.noise_std();
  const double e3 = std::exp(3.0);

  r.effective_bias =
      norms.head / (16.0 * c.gamma * c.gamma * c.n * c.n) + norms.tail / 16.0;
  r.effective_var =
      beta * c.gamma * h_norm_sq / (128.0 * e3) *
          std::min(1.0 / c.spec.largest(), (2.0 * s + c.n) * c.gamma) * far_tail_sq +
      noise_sq / 600.0 *
          (k / c.n + c.gamma * band + horizon * c.gamma * c.gamma * far_tail_sq);
  r.total = r.effective_bias + r.effective_var;
  return r;
}

RatePrediction rate_prediction(RateCase which, const RateCaseParams& params, double n) {
  if (!(n > 1.0)) throw std::invalid_argument("rate_prediction: n must be > 1");
  std::ostringstream form;
  RatePrediction out;
  switch (which) {
    case RateCase::kPiecewise: {
      if (!(params.r > 0.0 && params.r <= 1.0)) {
        throw std::invalid_argument("rate_prediction: piecewise needs 0 < r <= 1");
      }
      if (params.dim_fixed) {
        out.exponent = params.r - 1.0;
        out.value = std::pow(n, params.r - 1.0);
        form << "N^" << params.r - 1.0;
      } else {
        if (!(params.q >= 1.0)) throw std::invalid_argument("rate_prediction: piecewise needs q >= 1");
        out.exponent = std::max(params.r - 1.0, 1.0 - params.q);
        out.value = std::pow(n, params.r - 1.0) + std::pow(n, 1.0 - params.q);
        form << "N^" << params.r - 1.0 << " + N^" << 1.0 - params.q;
      }
      break;
    }
    case RateCase::kPowerLaw: {
      if (!(params.r > 0.0)) throw std::invalid_argument("rate_prediction: power_law needs r > 0");
      const double e = -params.r / (1.0 + params.r);
      out.exponent = e;
      out.value = std::pow(n, e);
      form << "N^" << e;
      break;
    }
    case RateCase::kLogPoly: {
      if (!(params.beta > 1.0)) throw std::invalid_argument("rate_prediction: log_poly needs beta > 1");
      out.value = std::pow(std::log(n), -params.beta);
      form << "log(N)^-" << params.beta;
      break;
    }
    case RateCase::kExponential:
      out.value = std::log(n) / n;
      form << "log(N)/N";
      break;
  }
  out.form = form.str();
  return out;
}

}  // namespace sgdlab
