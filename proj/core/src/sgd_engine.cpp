#include "sgdlab/sgd_engine.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace sgdlab {

void SgdConfig::validate(std::size_t dim) const {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) {
    throw std::invalid_argument("sgd: stepsize gamma must be finite and > 0");
  }
  if (n_samples < 1) throw std::invalid_argument("sgd: n_samples must be >= 1");
  if (static_cast<std::size_t>(w0.size()) != dim) {
    throw std::invalid_argument("sgd: w0 dimension does not match model");
  }
}

RiskEstimate RiskEstimate::from_samples(std::span<const double> samples) {
  RiskEstimate out;
  out.replicates = samples.size();
  if (samples.empty()) return out;
  CompensatedSum sum;
  for (double v : samples) sum += v;
  const double n = static_cast<double>(samples.size());
  out.mean = sum.value() / n;
  if (samples.size() > 1) {
    CompensatedSum sq;
    for (double v : samples) sq += (v - out.mean) * (v - out.mean);
    out.std_err = std::sqrt(sq.value() / (n - 1.0)) / std::sqrt(n);
  }
  return out;
}

namespace {

// Drives one example stream through `update(x, xi)` and averages `state()`
// over the window [s, s+N). Examples that would only produce iterates past
// the window are never drawn.
template <typename Update, typename Observe>
void stream(const RegressionModel& model, const SgdConfig& cfg, Rng& rng,
            Update&& update, Observe&& observe) {
  ExampleSampler sampler(model);
  Vector x(static_cast<Eigen::Index>(model.dim()));
  const std::size_t last = cfg.horizon() - 1;
  for (std::size_t t = 0;; ++t) {
    if (t >= cfg.tail_start) observe(t - cfg.tail_start);
    if (t == last) break;
    const double xi = sampler.draw(rng, x);
    if (!update(x, xi)) {
      throw DivergenceError("sgd: non-finite iterate", t + 1);
    }
  }
}

void running_mean(Vector& avg, const Vector& value, std::size_t count) {
  avg += (value - avg) / static_cast<double>(count + 1);
}

void require_finite(const Vector& v, const SgdConfig& cfg) {
  if (!v.allFinite()) throw DivergenceError("sgd: non-finite average", cfg.horizon() - 1);
}

}  // namespace

Vector run_sgd(const RegressionModel& model, const SgdConfig& cfg, Rng& rng) {
  cfg.validate(model.dim());
  Vector w = cfg.w0;
  Vector avg = Vector::Zero(w.size());
  const Vector& w_star = model.w_star();
  stream(
      model, cfg, rng,
      [&](const Vector& x, double xi) {
        const double y = w_star.dot(x) + xi;
        const double residual = y - w.dot(x);
        if (!std::isfinite(residual)) return false;
        w += (cfg.gamma * residual) * x;
        return true;
      },
      [&](std::size_t k) { running_mean(avg, w, k); });
  require_finite(avg, cfg);
  return avg;
}

Vector run_bias_chain(const RegressionModel& model, const SgdConfig& cfg, Rng& rng) {
  cfg.validate(model.dim());
  Vector beta = cfg.w0 - model.w_star();
  Vector avg = Vector::Zero(beta.size());
  stream(
      model, cfg, rng,
      [&](const Vector& x, double) {
        const double proj = beta.dot(x);
        if (!std::isfinite(proj)) return false;
        beta -= (cfg.gamma * proj) * x;
        return true;
      },
      [&](std::size_t k) { running_mean(avg, beta, k); });
  require_finite(avg, cfg);
  return avg;
}

Vector run_variance_chain(const RegressionModel& model, const SgdConfig& cfg, Rng& rng) {
  cfg.validate(model.dim());
  if (!model.well_specified()) {
    throw std::invalid_argument("variance chain requires a well-specified model");
  }
  Vector beta = Vector::Zero(static_cast<Eigen::Index>(model.dim()));
  Vector avg = Vector::Zero(beta.size());
  stream(
      model, cfg, rng,
      [&](const Vector& x, double xi) {
        const double proj = beta.dot(x);
        if (!std::isfinite(proj)) return false;
        beta += (cfg.gamma * (xi - proj)) * x;
        return true;
      },
      [&](std::size_t k) { running_mean(avg, beta, k); });
  require_finite(avg, cfg);
  return avg;
}

CoupledAverages run_coupled(const RegressionModel& model, const SgdConfig& cfg, Rng& rng) {
  cfg.validate(model.dim());
  if (!model.well_specified()) {
    throw std::invalid_argument("coupled chains require a well-specified model");
  }
  const auto d = static_cast<Eigen::Index>(model.dim());
  const Vector& w_star = model.w_star();
  Vector w = cfg.w0;
  Vector bias = cfg.w0 - w_star;
  Vector var = Vector::Zero(d);
  CoupledAverages out{Vector::Zero(d), Vector::Zero(d), Vector::Zero(d)};
  stream(
      model, cfg, rng,
      [&](const Vector& x, double xi) {
        const double residual = w_star.dot(x) + xi - w.dot(x);
        const double bias_proj = bias.dot(x);
        const double var_proj = var.dot(x);
        if (!std::isfinite(residual) || !std::isfinite(bias_proj) ||
            !std::isfinite(var_proj)) {
          return false;
        }
        w += (cfg.gamma * residual) * x;
        bias -= (cfg.gamma * bias_proj) * x;
        var += (cfg.gamma * (xi - var_proj)) * x;
        return true;
      },
      [&](std::size_t k) {
        running_mean(out.full, w, k);
        running_mean(out.bias, bias, k);
        running_mean(out.variance, var, k);
      });
  require_finite(out.full, cfg);
  return out;
}

RiskEstimate monte_carlo_risk(const RegressionModel& model, const SgdConfig& cfg,
                              std::size_t replicates, std::size_t threads) {
  if (replicates < 2) throw std::invalid_argument("monte_carlo_risk: replicates must be >= 2");
  cfg.validate(model.dim());
  std::vector<double> risks(replicates);
  parallel_for(replicates, threads, [&](std::size_t r) {
    Rng rng = replicate_rng(cfg.seed, r);
    risks[r] = excess_risk(model, run_sgd(model, cfg, rng));
  });
  return RiskEstimate::from_samples(risks);
}

RiskDecomposition monte_carlo_decomposition(const RegressionModel& model,
                                            const SgdConfig& cfg,
                                            std::size_t replicates,
                                            std::size_t threads) {
  if (replicates < 2) {
    throw std::invalid_argument("monte_carlo_decomposition: replicates must be >= 2");
  }
  cfg.validate(model.dim());
  std::vector<double> bias(replicates);
  std::vector<double> var(replicates);
  const auto& l = model.spectrum().values();
  parallel_for(replicates, threads, [&](std::size_t r) {
    Rng rng = replicate_rng(cfg.seed, r);
    const CoupledAverages avg = run_coupled(model, cfg, rng);
    bias[r] = 0.5 * avg.bias.cwiseAbs2().dot(l);
    var[r] = 0.5 * avg.variance.cwiseAbs2().dot(l);
  });
  return {RiskEstimate::from_samples(bias), RiskEstimate::from_samples(var)};
}

}  // namespace sgdlab
