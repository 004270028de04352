#include <benchmark/benchmark.h>

#include <random>

#include "sgdlab/sgdlab.hpp"

namespace {

sgdlab::RegressionModel power_law_model(std::size_t d) {
  sgdlab::SpectrumParams params;
  params.r = 1.0;
  auto spec = sgdlab::Spectrum::build(sgdlab::SpectrumFamily::kPowerLaw, params, d);
  return sgdlab::RegressionModel(std::move(spec), sgdlab::Vector::Ones(static_cast<Eigen::Index>(d)), 1.0);
}

sgdlab::SgdConfig config_for(const sgdlab::RegressionModel& model, std::size_t n) {
  sgdlab::SgdConfig cfg;
  cfg.gamma = 1.0 / (6.0 * model.spectrum().trace());
  cfg.n_samples = n;
  cfg.tail_start = n / 2;
  cfg.w0 = sgdlab::Vector::Zero(static_cast<Eigen::Index>(model.dim()));
  return cfg;
}

void BM_ExactRisk(benchmark::State& state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  const auto n = static_cast<std::size_t>(state.range(1));
  const auto model = power_law_model(d);
  const auto cfg = config_for(model, n);
  for (auto _ : state) {
    benchmark::DoNotOptimize(sgdlab::exact_risk(model, cfg).total);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(cfg.horizon() * d));
}
BENCHMARK(BM_ExactRisk)->Args({64, 1000})->Args({256, 4000})->Args({4096, 4000});

void BM_RunSgd(benchmark::State& state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  const auto model = power_law_model(d);
  const auto cfg = config_for(model, 1000);
  sgdlab::Rng rng(7);
  for (auto _ : state) {
    benchmark::DoNotOptimize(sgdlab::run_sgd(model, cfg, rng).data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(cfg.horizon()));
}
BENCHMARK(BM_RunSgd)->Arg(16)->Arg(256)->Arg(2048);

void BM_ApplyContraction(benchmark::State& state) {
  const auto d = static_cast<Eigen::Index>(state.range(0));
  const auto model = power_law_model(static_cast<std::size_t>(d));
  const sgdlab::Matrix a = sgdlab::Matrix::Identity(d, d);
  const double gamma = 1.0 / (6.0 * model.spectrum().trace());
  for (auto _ : state) {
    benchmark::DoNotOptimize(sgdlab::apply_contraction(model.spectrum(), gamma, a).data());
  }
}
BENCHMARK(BM_ApplyContraction)->Arg(16)->Arg(64)->Arg(256);

void BM_FitMinNorm(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto d = static_cast<std::size_t>(state.range(1));
  const auto model = power_law_model(d);
  sgdlab::Rng rng(11);
  const auto sample = sgdlab::draw_sample(model, n, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(sgdlab::fit_min_norm(sample).data());
  }
}
BENCHMARK(BM_FitMinNorm)->Args({128, 1024})->Args({512, 4096})->Args({1024, 128});

}  // namespace
