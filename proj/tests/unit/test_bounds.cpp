#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "sgdlab/bounds.hpp"
#include "sgdlab/operator_calculus.hpp"

using namespace sgdlab;

namespace {

RegressionModel make_model(std::vector<double> values, Vector w_star, double noise,
                           bool well_specified = true) {
  return RegressionModel(Spectrum(std::move(values)), std::move(w_star), noise, well_specified);
}

SgdConfig make_cfg(double gamma, std::size_t n, std::size_t s, Vector w0) {
  SgdConfig cfg;
  cfg.gamma = gamma;
  cfg.n_samples = n;
  cfg.tail_start = s;
  cfg.w0 = std::move(w0);
  return cfg;
}

Spectrum power_law(double r, std::size_t d) {
  SpectrumParams p;
  p.r = r;
  return Spectrum::build(SpectrumFamily::kPowerLaw, p, d);
}

bool all_nonnegative(const BoundReport& r) {
  return r.effective_bias >= 0.0 && r.effective_var >= 0.0 && r.total >= 0.0;
}

}  // namespace

TEST_CASE("upper bound: hand-evaluated scalar case") {
  const RegressionModel model = make_model({1.0}, Vector::Zero(1), 1.0);
  const BoundReport r = upper_bound(model, make_cfg(0.1, 100, 0, Vector::Ones(1)));
  CHECK(r.kind == BoundKind::kUpper);
  CHECK(r.k_star == 1);
  CHECK(r.effective_bias == doctest::Approx(0.01).epsilon(1e-14));
  const double ev = (3.0 * 0.1 / 0.7) * 0.01 + (1.0 / 0.7) * 0.01;
  CHECK(r.effective_var == doctest::Approx(ev).epsilon(1e-14));
  CHECK(r.total == doctest::Approx(2.0 * (0.01 + ev)).epsilon(1e-14));
  CHECK(r.admissible);
  CHECK(r.reason.empty());
}

TEST_CASE("zero initial error and zero noise give zero bounds") {
  const Vector w_star = Vector::LinSpaced(4, 1.0, 2.0);
  const RegressionModel model = make_model({1.0, 0.5, 0.25, 0.1}, w_star, 0.0);
  const SgdConfig cfg = make_cfg(0.1, 600, 300, w_star);
  CHECK(upper_bound(model, cfg).total == 0.0);
  CHECK(lower_bound(model, cfg).total == 0.0);
  CHECK(corollary_bound(model, cfg, BoundKind::kLargeStep).total == 0.0);
  CHECK(corollary_bound(model, cfg, BoundKind::kCrude).total == 0.0);
  CHECK(tail_upper_bound(model, cfg).total == 0.0);
  CHECK(tail_lower_bound(model, cfg).total == 0.0);
}

TEST_CASE("lower bound: hand-evaluated noise-only case") {
  const RegressionModel model = make_model({1.0}, Vector::Zero(1), 1.0);
  const BoundReport r = lower_bound(model, make_cfg(0.5, 500, 0, Vector::Zero(1)));
  CHECK(r.k_star == 1);
  CHECK(r.total == doctest::Approx(4e-5).epsilon(1e-14));
  CHECK(r.admissible);
}

TEST_CASE("admissibility flags") {
  const RegressionModel model = make_model({1.0, 0.5}, Vector::Zero(2), 1.0);
  const BoundReport hot = upper_bound(model, make_cfg(1.0, 100, 0, Vector::Ones(2)));
  CHECK_FALSE(hot.admissible);
  CHECK(hot.reason.find("1/(alpha tr H)") != std::string::npos);
  CHECK(std::isfinite(hot.total));

  const BoundReport short_run = lower_bound(model, make_cfg(0.1, 499, 0, Vector::Ones(2)));
  CHECK_FALSE(short_run.admissible);
  CHECK(short_run.reason.find("N < 500") != std::string::npos);

  const BoundReport big_step = lower_bound(model, make_cfg(1.0, 500, 0, Vector::Ones(2)));
  CHECK_FALSE(big_step.admissible);

  const RegressionModel mis = make_model({1.0, 0.5}, Vector::Zero(2), 1.0, false);
  const BoundReport m = lower_bound(mis, make_cfg(0.1, 500, 0, Vector::Ones(2)));
  CHECK_FALSE(m.admissible);
  CHECK(m.reason.find("mis-specified") != std::string::npos);
  CHECK(upper_bound(mis, make_cfg(0.1, 500, 0, Vector::Ones(2))).admissible);
  CHECK_FALSE(tail_lower_bound(mis, make_cfg(0.1, 500, 100, Vector::Ones(2))).admissible);

  CHECK_THROWS_AS(corollary_bound(model, make_cfg(0.1, 10, 0, Vector::Ones(2)), BoundKind::kUpper),
                  std::invalid_argument);
}

TEST_CASE("corollaries at the large stepsize") {
  const Spectrum spec = power_law(1.0, 50);
  const RegressionModel model(spec, Vector::Zero(50), 0.8);
  const Vector w0 = Vector::Ones(50) * 0.3;
  const std::size_t n = 2000;
  const double alpha = 3.0;
  const BoundReport large = corollary_bound(model, make_cfg(123.0, n, 0, w0), BoundKind::kLargeStep);
  CHECK(large.gamma == doctest::Approx(1.0 / (2.0 * alpha * spec.trace())));

  // k* = max{k : lambda_k >= 2 alpha tr H / N}
  std::size_t k = 0;
  for (std::size_t i = 0; i < spec.dim(); ++i) {
    if (spec[i] >= 2.0 * alpha * spec.trace() / static_cast<double>(n)) k = i + 1;
  }
  CHECK(large.k_star == k);

  const double delta_sq = w0.squaredNorm();
  const double shape = static_cast<double>(k) / n +
                       n * tail_power_sum(spec, k, 2) / (4.0 * alpha * alpha * spec.trace() * spec.trace());
  const double prefactor = 2.0 * 0.64 + alpha * alpha * spec.trace() * delta_sq / n;
  CHECK(large.effective_var == doctest::Approx(prefactor * shape).epsilon(1e-12));

  const BoundReport crude = corollary_bound(model, make_cfg(1.0, n, 0, w0), BoundKind::kCrude);
  CHECK(crude.total ==
        doctest::Approx(8.0 * alpha * delta_sq * spec.trace() / n + 4.0 * 0.64 * shape).epsilon(1e-12));
}

TEST_CASE("crude bound dominates the sharp bound at the large stepsize") {
  Rng rng(12);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t d = 1 + static_cast<std::size_t>(unit(rng) * 40);
    std::vector<double> values(d);
    for (double& v : values) v = std::exp(-6.0 * unit(rng));
    Vector w0(static_cast<Eigen::Index>(d));
    for (Eigen::Index i = 0; i < w0.size(); ++i) w0[i] = 2.0 * unit(rng) - 1.0;
    const RegressionModel model = make_model(values, Vector::Zero(static_cast<Eigen::Index>(d)), unit(rng));
    const std::size_t n = 10 + static_cast<std::size_t>(unit(rng) * 5000);
    const double gamma = large_step_gamma(model.spectrum());
    const BoundReport crude = corollary_bound(model, make_cfg(gamma, n, 0, w0), BoundKind::kCrude);
    const BoundReport sharp = upper_bound(model, make_cfg(gamma, n, 0, w0));
    CHECK(crude.total >= sharp.total * (1.0 - 1e-12));
    CHECK(all_nonnegative(crude));
    CHECK(all_nonnegative(sharp));
  }
}

TEST_CASE("tail bounds reduce to the full-averaging bounds at s = 0") {
  const Spectrum spec = power_law(0.5, 40);
  const RegressionModel model(spec, Vector::Zero(40), 0.7);
  const Vector w0 = Vector::LinSpaced(40, 1.0, -1.0);
  const SgdConfig cfg = make_cfg(1.0 / (6.0 * spec.trace()), 800, 0, w0);
  const BoundReport full = upper_bound(model, cfg);
  const BoundReport tail = tail_upper_bound(model, cfg);
  REQUIRE(tail.k_dagger.has_value());
  CHECK(*tail.k_dagger == tail.k_star);
  CHECK(tail.k_star == full.k_star);
  CHECK(tail.effective_bias == doctest::Approx(full.effective_bias).epsilon(1e-14));

  // Only the SGD-variance term differs, by its leading factor 2.
  const double slack = 1.0 - cfg.gamma * 3.0 * spec.trace();
  const double k = static_cast<double>(full.k_star);
  const double sgd_term = 3.0 * cfg.gamma * w0.squaredNorm() / slack *
                          (k / (800.0 * 800.0 * cfg.gamma * cfg.gamma) + tail_power_sum(spec, full.k_star, 2));
  CHECK(tail.effective_var == doctest::Approx(full.effective_var + sgd_term).epsilon(1e-12));

  const BoundReport lower_full = lower_bound(model, cfg);
  const BoundReport lower_tail = tail_lower_bound(model, cfg);
  CHECK(lower_tail.effective_bias == doctest::Approx(lower_full.effective_bias).epsilon(1e-14));
  CHECK(lower_tail.effective_var <= lower_full.effective_var);
}

TEST_CASE("tail bias head term decays by (1 - gamma lambda_1)^{2s}") {
  const RegressionModel model = make_model({1.0, 0.5, 0.1}, Vector::Zero(3), 1.0);
  Vector e1 = Vector::Zero(3);
  e1[0] = 1.0;
  const double gamma = 0.2;
  const BoundReport base = tail_upper_bound(model, make_cfg(gamma, 600, 0, e1));
  for (std::size_t s : {10u, 300u, 600u}) {
    const BoundReport r = tail_upper_bound(model, make_cfg(gamma, 600, s, e1));
    const double factor = std::pow(1.0 - gamma, 2.0 * static_cast<double>(s));
    CHECK(std::abs(r.effective_bias - factor * base.effective_bias) <=
          1e-10 * factor * base.effective_bias);
    CHECK(r.tail_start == s);
  }
}

TEST_CASE("upper bound monotonicity and scaling") {
  const Spectrum spec = power_law(1.0, 100);
  const RegressionModel model(spec, Vector::Zero(100), 0.0);
  const Vector w0 = Vector::LinSpaced(100, 1.0, 0.0);
  const double gamma = 1.0 / (6.0 * spec.trace());
  std::size_t prev_k = 0;
  double prev_bias = INFINITY;
  for (std::size_t n : {10u, 100u, 1000u, 10000u, 100000u}) {
    const BoundReport r = upper_bound(model, make_cfg(gamma, n, 0, w0));
    CHECK(r.k_star >= prev_k);
    CHECK(r.effective_bias <= prev_bias);
    prev_k = r.k_star;
    prev_bias = r.effective_bias;
  }

  for (double c : {0.5, 2.0, 7.0}) {
    const BoundReport a = upper_bound(model, make_cfg(gamma, 3000, 0, w0));
    const BoundReport b = upper_bound(model, make_cfg(gamma, 3000, 0, c * w0));
    CHECK(b.effective_bias == doctest::Approx(c * c * a.effective_bias).epsilon(1e-12));
    CHECK(b.effective_var == doctest::Approx(c * c * a.effective_var).epsilon(1e-12));
  }
}

TEST_CASE("small sandwich grid") {
  Rng rng(99);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 12; ++trial) {
    const std::size_t d = 2 + static_cast<std::size_t>(unit(rng) * 10);
    const Spectrum spec = power_law(0.5 + unit(rng), d);
    Vector w0(static_cast<Eigen::Index>(d));
    for (Eigen::Index i = 0; i < w0.size(); ++i) w0[i] = 2.0 * unit(rng) - 1.0;
    const RegressionModel model(spec, Vector::Zero(static_cast<Eigen::Index>(d)), unit(rng));
    const SgdConfig cfg = make_cfg(1.0 / (6.0 * spec.trace()), 500 + 100 * trial, 0, w0);
    const double exact = exact_risk(model, cfg).total;
    CHECK(lower_bound(model, cfg).total <= exact);
    CHECK(exact <= upper_bound(model, cfg).total);

    SgdConfig tail = cfg;
    tail.tail_start = cfg.n_samples;
    const double exact_tail = exact_risk(model, tail).total;
    CHECK(tail_lower_bound(model, tail).total <= exact_tail);
    CHECK(exact_tail <= tail_upper_bound(model, tail).total);
  }
}

TEST_CASE("rate predictions") {
  RateCaseParams p;
  p.r = 1.0;
  const RatePrediction pl = rate_prediction(RateCase::kPowerLaw, p, 1000.0);
  REQUIRE(pl.exponent.has_value());
  CHECK(*pl.exponent == doctest::Approx(-0.5));
  CHECK(pl.value == doctest::Approx(std::pow(1000.0, -0.5)));

  const RatePrediction ex = rate_prediction(RateCase::kExponential, p, 1000.0);
  CHECK_FALSE(ex.exponent.has_value());
  CHECK(ex.form == "log(N)/N");
  CHECK(ex.value == doctest::Approx(std::log(1000.0) / 1000.0));

  RateCaseParams pw;
  pw.r = 0.5;
  pw.q = 2.0;
  const RatePrediction pc = rate_prediction(RateCase::kPiecewise, pw, 400.0);
  REQUIRE(pc.exponent.has_value());
  CHECK(*pc.exponent == doctest::Approx(-0.5));
  CHECK(pc.value == doctest::Approx(1.0 / 20.0 + 1.0 / 400.0));

  RateCaseParams lp;
  lp.beta = 2.0;
  CHECK(rate_prediction(RateCase::kLogPoly, lp, 100.0).value ==
        doctest::Approx(std::pow(std::log(100.0), -2.0)));

  pw.q = 0.5;
  CHECK_THROWS_AS(rate_prediction(RateCase::kPiecewise, pw, 100.0), std::invalid_argument);
  CHECK_THROWS_AS(rate_prediction(RateCase::kPowerLaw, p, 1.0), std::invalid_argument);
}

TEST_CASE("bound kind names") {
  CHECK(to_string(BoundKind::kUpper) == "upper");
  CHECK(to_string(BoundKind::kLower) == "lower");
  CHECK(to_string(BoundKind::kLargeStep) == "large_step");
  CHECK(to_string(BoundKind::kCrude) == "crude");
  CHECK(to_string(BoundKind::kTailUpper) == "tail_upper");
  CHECK(to_string(BoundKind::kTailLower) == "tail_lower");
}
