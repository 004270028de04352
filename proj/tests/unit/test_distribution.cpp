#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>

#include "sgdlab/distribution.hpp"
#include "sgdlab/numerics.hpp"

using namespace sgdlab;

namespace {

Spectrum spectrum_of(std::vector<double> values) { return Spectrum(std::move(values)); }

Matrix random_psd(Eigen::Index d, Rng& rng) {
  std::normal_distribution<double> normal;
  Matrix g(d, d);
  for (Eigen::Index j = 0; j < d; ++j)
    for (Eigen::Index i = 0; i < d; ++i) g(i, j) = normal(rng);
  return g * g.transpose();
}

Spectrum random_spectrum(Eigen::Index d, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.05, 2.0);
  std::vector<double> values(static_cast<std::size_t>(d));
  for (double& v : values) v = unit(rng);
  return Spectrum(values);
}

}  // namespace

TEST_CASE("noiseless labels are exactly linear") {
  RegressionModel model(spectrum_of({2.0, 1.0, 0.5}), Vector::LinSpaced(3, -1.0, 1.0), 0.0);
  Rng rng(3);
  for (int i = 0; i < 100; ++i) {
    const Example ex = sample_example(model, rng);
    CHECK(ex.y == model.w_star().dot(ex.x));
  }
}

TEST_CASE("feature variance matches the spectrum") {
  RegressionModel model(spectrum_of({4.0}), Vector::Zero(1), 1.0);
  ExampleSampler sampler(model);
  Rng rng(11);
  Vector x;
  const int n = 1'000'000;
  CompensatedSum sum, sq;
  for (int i = 0; i < n; ++i) {
    sampler.draw(rng, x);
    const double v = x[0] * x[0];
    sum += v;
    sq += v * v;
  }
  const double mean = sum.value() / n;
  const double se = std::sqrt((sq.value() / n - mean * mean) / n);
  CHECK(std::abs(mean - 4.0) <= 3.0 * se);
}

TEST_CASE("labels are uncorrelated with features when w* = 0") {
  RegressionModel model(spectrum_of({1.0, 0.5, 0.25}), Vector::Zero(3), 1.0);
  ExampleSampler sampler(model);
  Rng rng(12);
  Vector x;
  const int n = 1'000'000;
  std::vector<CompensatedSum> sum(3), sq(3);
  for (int i = 0; i < n; ++i) {
    const double y = sampler.draw(rng, x);
    for (int j = 0; j < 3; ++j) {
      sum[j] += y * x[j];
      sq[j] += y * y * x[j] * x[j];
    }
  }
  for (int j = 0; j < 3; ++j) {
    const double mean = sum[j].value() / n;
    const double se = std::sqrt((sq[j].value() / n - mean * mean) / n);
    CHECK(std::abs(mean) <= 3.0 * se);
  }
}

TEST_CASE("fourth moment closed form") {
  const double h = 1.7, c = 0.4;
  const Matrix out = fourth_moment_apply(spectrum_of({h}), Matrix::Constant(1, 1, c));
  CHECK(out(0, 0) == doctest::Approx(3.0 * h * h * c));

  CHECK(fourth_moment_apply(spectrum_of({1.0, 0.5}), Matrix::Zero(2, 2)).isZero());

  Matrix asym(2, 2);
  asym << 1.0, 0.3, 0.0, 1.0;
  CHECK_THROWS_AS(fourth_moment_apply(spectrum_of({1.0, 0.5}), asym), std::invalid_argument);
  CHECK_THROWS_AS(fourth_moment_apply(spectrum_of({1.0, 0.5}), Matrix::Identity(3, 3)),
                  std::invalid_argument);
}

TEST_CASE("fourth moment agrees with a Monte Carlo average") {
  const Spectrum spec = spectrum_of({1.5, 0.8, 0.3});
  RegressionModel model(spec, Vector::Zero(3), 0.0);
  Rng rng(21);
  const Matrix a = random_psd(3, rng);
  const Matrix exact = fourth_moment_apply(spec, a);

  ExampleSampler sampler(model);
  Vector x;
  const int n = 1'000'000;
  Matrix sum = Matrix::Zero(3, 3), sq = Matrix::Zero(3, 3);
  for (int i = 0; i < n; ++i) {
    sampler.draw(rng, x);
    const Matrix sample = x.dot(a * x) * (x * x.transpose());
    sum += sample;
    sq += sample.cwiseAbs2();
  }
  const Matrix mean = sum / n;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      const double se = std::sqrt((sq(i, j) / n - mean(i, j) * mean(i, j)) / n);
      CHECK(std::abs(mean(i, j) - exact(i, j)) <= 3.0 * se);
    }
  }
}

TEST_CASE("fourth moment is linear and PSD-preserving, and dominates HAH") {
  Rng rng(5);
  for (int trial = 0; trial < 40; ++trial) {
    const Eigen::Index d = 1 + trial % 6;
    const Spectrum spec = random_spectrum(d, rng);
    const Matrix a = random_psd(d, rng);
    const Matrix b = random_psd(d, rng);
    const Matrix lin = fourth_moment_apply(spec, 2.0 * a + 0.5 * b) -
                       (2.0 * fourth_moment_apply(spec, a) + 0.5 * fourth_moment_apply(spec, b));
    CHECK(lin.cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + max_abs_entry(a) + max_abs_entry(b)));
    const Matrix ma = fourth_moment_apply(spec, a);
    CHECK(psd_margin(ma, max_abs_entry(ma)) >= -kPsdTolerance);
    const Matrix diff = ma - sandwich(spec, a);
    CHECK(psd_margin(diff, max_abs_entry(ma)) >= -kPsdTolerance);
  }
}

TEST_CASE("moment constants of Gaussian models") {
  Rng rng(8);
  for (Eigen::Index d = 1; d <= 8; ++d) {
    RegressionModel model(random_spectrum(d, rng), Vector::Zero(d), 0.7);
    const MomentConstants mc = verify_moment_constants(model, 100, rng);
    CHECK(mc.alpha >= 1.0);
    CHECK(mc.alpha <= 3.0 + 1e-8);
    CHECK(mc.beta >= 1.0 - 1e-8);
    const Spectrum& s = model.spectrum();
    CHECK(mc.r_squared == doctest::Approx(s.trace() + 2.0 * s.largest()).epsilon(1e-10));
    CHECK(mc.r_squared <= mc.alpha * s.trace() * (1.0 + 1e-12));
    CHECK(mc.sigma_sq == doctest::Approx(0.49));
    CHECK(mc.tested == static_cast<std::size_t>(100 + d + 1));
  }
}

TEST_CASE("scalar model has alpha = 3 and beta = 2") {
  Rng rng(1);
  RegressionModel model(spectrum_of({0.3}), Vector::Zero(1), 1.0);
  const MomentConstants mc = verify_moment_constants(model, 10, rng);
  CHECK(mc.alpha == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(mc.beta == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(check_beta_claim(model.spectrum(), 2.0).holds);
}

TEST_CASE("beta = 2 fails on the second eigen-projector") {
  const Spectrum spec = spectrum_of({1.0, 0.4, 0.1});
  Matrix a = Matrix::Zero(3, 3);
  a(1, 1) = 1.0;
  const MomentProbe probe = probe_moment_constants(spec, a);
  CHECK(probe.beta == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(probe.beta < 1.0 + spec[1] / spec[0]);
  CHECK(probe.beta < 2.0);

  const BetaClaimCheck claim = check_beta_claim(spec, 2.0);
  CHECK_FALSE(claim.holds);
  CHECK(claim.worst_margin < 0.0);
  CHECK(check_beta_claim(spec, 1.0).holds);
}

TEST_CASE("noise level") {
  RegressionModel well(spectrum_of({1.0, 0.5}), Vector::Zero(2), 0.5);
  CHECK(well.noise_level() == doctest::Approx(0.25));
  CHECK(well.noise_covariance_diag()[1] == doctest::Approx(0.125));

  // Mis-specified: E[xi^2 x x^T] = sigma^2 (d+2)/d H, checked by simulation.
  const Spectrum spec = spectrum_of({1.0, 0.5, 0.2});
  RegressionModel mis(spec, Vector::Zero(3), 1.0, false);
  CHECK(mis.noise_level() == doctest::Approx(5.0 / 3.0));
  ExampleSampler sampler(mis);
  Rng rng(31);
  Vector x;
  const int n = 400'000;
  Vector sum = Vector::Zero(3), sq = Vector::Zero(3);
  for (int i = 0; i < n; ++i) {
    const double xi = sampler.draw(rng, x);
    const Vector v = (xi * xi) * x.cwiseAbs2();
    sum += v;
    sq += v.cwiseAbs2();
  }
  for (int j = 0; j < 3; ++j) {
    const double mean = sum[j] / n;
    const double se = std::sqrt((sq[j] / n - mean * mean) / n);
    CHECK(std::abs(mean - mis.noise_covariance_diag()[j]) <= 3.0 * se);
  }
}

TEST_CASE("excess risk") {
  RegressionModel model(spectrum_of({2.0, 1.0}), Vector::Constant(2, 0.5), 1.0);
  CHECK(excess_risk(model, model.w_star()) == 0.0);
  CHECK(excess_risk(model, model.w_star() + Vector::Ones(2)) == doctest::Approx(1.5));
  RegressionModel scalar(spectrum_of({1.0}), Vector::Zero(1), 1.0);
  CHECK(excess_risk(scalar, Vector::Constant(1, 3.0)) == doctest::Approx(4.5));
  CHECK_THROWS_AS(excess_risk(model, Vector::Zero(3)), std::invalid_argument);
}

TEST_CASE("model validation") {
  CHECK_THROWS_AS(RegressionModel(spectrum_of({1.0}), Vector::Zero(2), 1.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(RegressionModel(spectrum_of({1.0}), Vector::Zero(1), -1.0),
                  std::invalid_argument);
}
