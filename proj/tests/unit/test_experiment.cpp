#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "sgdlab/experiment_commands.hpp"
#include "sgdlab/experiment_config.hpp"
#include "sgdlab/operator_calculus.hpp"

using namespace sgdlab;

namespace {

const char* kSmallYaml = R"(
model:
  spectrum:
    family: power_law
    r: 1.0
    d: 6
  w_star: ones
  noise_std: 0.5
sgd:
  gamma: {inverse_trace: 6}
  n: [40, 80, 160, 320]
  tail_start: half
  w0: zeros
run:
  replicates: 40
  seed: 17
  moment_trials: 20
  order_steps: 100
  ridge_lambdas: [0.01, 1.0e9]
  threads: 1
)";

const char* kSmallJson = R"({
  "model": {"spectrum": {"family": "power_law", "r": 1.0, "d": 6},
            "w_star": "ones", "noise_std": 0.5},
  "sgd": {"gamma": {"inverse_trace": 6}, "n": [40, 80, 160, 320],
          "tail_start": "half", "w0": "zeros"},
  "run": {"replicates": 40, "seed": 17, "moment_trials": 20, "order_steps": 100,
          "ridge_lambdas": [0.01, 1.0e9], "threads": 1}
})";

std::string error_of(const std::string& text) {
  try {
    parse_config_text(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

std::string replace(std::string text, const std::string& from, const std::string& to) {
  const auto pos = text.find(from);
  REQUIRE(pos != std::string::npos);
  text.replace(pos, from.size(), to);
  return text;
}

const Table& extra(const CommandResult& r, const std::string& name) {
  for (const auto& [stem, table] : r.extras) {
    if (stem == name) return table;
  }
  FAIL("missing table " << name);
  return r.table;
}

double as_double(const Table::Cell& c) { return std::get<double>(c); }

}  // namespace

TEST_CASE("YAML and JSON configs agree") {
  const ExperimentConfig y = parse_config_text(kSmallYaml);
  const ExperimentConfig j = parse_config_text(kSmallJson);
  CHECK(y.sgd.n_list == std::vector<std::size_t>{40, 80, 160, 320});
  CHECK(j.sgd.n_list == y.sgd.n_list);
  CHECK(y.run.seed == 17);
  CHECK(j.run.ridge_lambdas == y.run.ridge_lambdas);
  const RegressionModel my = y.model_for(80);
  const RegressionModel mj = j.model_for(80);
  CHECK(my.dim() == 6);
  CHECK((my.spectrum().values() - mj.spectrum().values()).norm() == 0.0);
  const SgdConfig cy = y.sgd_for(my, 80, true);
  CHECK(cy.tail_start == 40);
  CHECK(cy.gamma == doctest::Approx(1.0 / (6.0 * my.spectrum().trace())));
  CHECK(y.sgd_for(my, 80, false).tail_start == 0);
  CHECK(cy.seed == 17);
}

TEST_CASE("config files load by extension") {
  const auto dir = std::filesystem::temp_directory_path() / "sgdlab_config_load";
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "c.yaml") << kSmallYaml;
  std::ofstream(dir / "c.json") << kSmallJson;
  CHECK(load_config(dir / "c.yaml").sgd.n_list == load_config(dir / "c.json").sgd.n_list);
  CHECK_THROWS_AS(load_config(dir / "missing.yaml"), ConfigError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("config errors name the field") {
  CHECK(error_of(replace(kSmallYaml, "    r: 1.0\n", "    r: 1.0\n    colour: red\n"))
            .find("model.spectrum.colour") != std::string::npos);
  CHECK(error_of(replace(kSmallYaml, "[40, 80, 160, 320]", "[40, 80, 80, 320]"))
            .find("sgd.n") != std::string::npos);
  CHECK(error_of(replace(kSmallYaml, "family: power_law", "family: cubic"))
            .find("model.spectrum.family") != std::string::npos);
  CHECK(error_of(replace(kSmallYaml, "{inverse_trace: 6}", "-0.1")).find("sgd.gamma") !=
        std::string::npos);
  CHECK(error_of(replace(kSmallYaml, "w0: zeros", "w0: [1, 2]")).rfind("sgd", 0) == 0);
  CHECK(error_of(replace(kSmallYaml, "[0.01, 1.0e9]", "[0.0]")).find("run.ridge_lambdas") !=
        std::string::npos);
  CHECK(error_of(replace(kSmallYaml, "    d: 6\n", "    d: 6\n    q: 1.5\n")).find("model.spectrum") !=
        std::string::npos);
  CHECK_FALSE(error_of("sgd:\n  n: [10]\n").empty());
  const std::string yaml_error = error_of("model:\n  spectrum: [1, 2\n");
  CHECK(yaml_error.find("line") != std::string::npos);
  CHECK_FALSE(error_of("{\"model\": ").empty());
}

TEST_CASE("dimension, tail and vector rules") {
  CHECK(DimensionRule{DimensionRule::Kind::kFixed, 12.0}.resolve(1000) == 12);
  CHECK(DimensionRule{DimensionRule::Kind::kPower, 1.5}.resolve(100) == 1000);
  CHECK(DimensionRule{DimensionRule::Kind::kPower, 1.5}.resolve(10) == 32);
  CHECK(DimensionRule{DimensionRule::Kind::kPerSample, 2.5}.resolve(10) == 25);

  CHECK(TailSpec{TailSpec::Rule::kFixed, 7}.resolve(100) == 7);
  CHECK(TailSpec{TailSpec::Rule::kHalf, 0}.resolve(101) == 50);
  CHECK(TailSpec{TailSpec::Rule::kFull, 0}.resolve(101) == 101);

  const Vector tail = VectorSpec{VectorSpec::Pattern::kUniformTail, {}, 1.0}.build(7);
  CHECK(tail.norm() == doctest::Approx(1.0));
  CHECK(tail.head(3).isZero());
  CHECK(tail[3] == doctest::Approx(0.5));
  const Vector e1 = VectorSpec{VectorSpec::Pattern::kFirstCoordinate, {}, 3.0}.build(4);
  CHECK(e1[0] == 3.0);
  CHECK(e1.tail(3).isZero());
  CHECK(VectorSpec{VectorSpec::Pattern::kOnes, {}, 2.0}.build(3).sum() == 6.0);
  CHECK(VectorSpec{VectorSpec::Pattern::kExplicit, {1.0, 2.0}, 1.0}.build(2)[1] == 2.0);
  CHECK_THROWS(VectorSpec{VectorSpec::Pattern::kExplicit, {1.0, 2.0}, 1.0}.build(3));
}

TEST_CASE("piecewise spectra with a growing head") {
  const ExperimentConfig c = parse_config_text(R"(
model:
  spectrum: {family: piecewise, r: 0.5, q: 1.5}
sgd:
  n: [100, 400]
)");
  const RegressionModel m = c.model_for(100);
  CHECK(m.dim() == 1000);
  CHECK(m.spectrum()[9] == doctest::Approx(0.1));
  CHECK(m.spectrum()[10] == doctest::Approx(1.0 / 990.0));
  const auto rate = rate_case_for(c);
  REQUIRE(rate.has_value());
  CHECK(rate->first == RateCase::kPiecewise);
  CHECK(rate->second.r == 0.5);
  CHECK(rate->second.q == 1.5);
}

TEST_CASE("table formats") {
  Table t({"name", "value", "flag", "count", "missing"});
  t.add_row({std::string("a,b"), 0.1, true, std::int64_t{3}, Table::Cell{}});
  t.add_row({std::string("plain"), INFINITY, false, std::int64_t{-1}, Table::Cell{}});
  CHECK(t.to_csv() == "name,value,flag,count,missing\n\"a,b\",0.1,true,3,\nplain,inf,false,-1,\n");
  const auto j = t.to_json();
  REQUIRE(j.size() == 2);
  CHECK(j[0]["value"].get<double>() == 0.1);
  CHECK(j[0]["missing"].is_null());
  CHECK(j[1]["value"].get<std::string>() == "inf");
  CHECK(j[0].begin().key() == "name");
  CHECK_THROWS(t.add_row({0.1}));
  CHECK_THROWS(t.at(0, "nope"));
  CHECK(format_double(0.1 + 0.2) == "0.30000000000000004");
}

TEST_CASE("oracle selection") {
  const RegressionModel small(Spectrum({1.0, 0.5}), Vector::Zero(2), 1.0);
  const RegressionModel mis(Spectrum({1.0, 0.5}), Vector::Zero(2), 1.0, false);
  SgdConfig cfg;
  cfg.gamma = 0.1;
  cfg.n_samples = 100;
  cfg.w0 = Vector::Zero(2);
  CHECK(use_oracle(OracleMode::kAuto, small, cfg));
  CHECK_FALSE(use_oracle(OracleMode::kForceMonteCarlo, small, cfg));
  CHECK_FALSE(use_oracle(OracleMode::kForceOracle, mis, cfg));
  const RegressionModel big(Spectrum(std::vector<double>(300, 1.0)), Vector::Zero(300), 1.0);
  cfg.w0 = Vector::Zero(300);
  CHECK_FALSE(use_oracle(OracleMode::kAuto, big, cfg));
  CHECK(use_oracle(OracleMode::kForceOracle, big, cfg));
}

TEST_CASE("upper-half slope fit") {
  const std::vector<double> n{10, 20, 40, 80, 160};
  std::vector<double> v;
  for (double x : n) v.push_back(3.0 * std::pow(x, -0.75));
  const SlopeFit fit = fit_upper_half_slope(n, v);
  CHECK(fit.valid);
  CHECK(fit.points == 3);
  CHECK(fit.slope == doctest::Approx(-0.75));
  CHECK(std::exp(fit.intercept) == doctest::Approx(3.0));

  // Only the largest three points enter.
  std::vector<double> bent = v;
  bent[0] = 1e6;
  bent[1] = 1e-6;
  CHECK(fit_upper_half_slope(n, bent).slope == doctest::Approx(-0.75));

  std::vector<double> holes = v;
  holes[4] = NAN;
  holes[3] = 0.0;
  CHECK(fit_upper_half_slope(n, holes).points == 2);
  CHECK_FALSE(fit_upper_half_slope(std::vector<double>{1, 2}, std::vector<double>{1, 1}).valid);
  CHECK_THROWS(fit_upper_half_slope(n, std::vector<double>{1.0}));
}

TEST_CASE("pinned headers") {
  CHECK(bounds_columns() ==
        std::vector<std::string>{"n", "d", "kind", "gamma", "tail_start", "effective_bias",
                                 "effective_var", "total", "k_star", "k_dagger", "admissible",
                                 "reason", "risk", "risk_std_err", "risk_source", "sandwich",
                                 "status"});
  CHECK(verify_columns() == std::vector<std::string>{"n", "d", "check", "value", "threshold",
                                                     "binding", "passed", "detail"});
  CHECK(sweep_columns() ==
        std::vector<std::string>{"n", "d", "gamma", "tail_start", "risk", "risk_std_err", "bias",
                                 "variance", "risk_source", "predicted_order", "status"});
  CHECK(sweep_fit_columns() ==
        std::vector<std::string>{"case", "predicted_form", "predicted_slope", "points",
                                 "fitted_slope", "compensated_slope", "tolerance",
                                 "within_tolerance", "status"});
  CHECK(compare_columns() ==
        std::vector<std::string>{"n", "d", "estimator", "lambda", "risk_mean", "risk_std_err",
                                 "risk_median", "replicates", "diverged", "comparator_lower",
                                 "comparator_upper", "comparator_k"});
}

TEST_CASE("bounds command") {
  const ExperimentConfig c = parse_config_text(kSmallYaml);
  const CommandResult r = cmd_bounds(c);
  CHECK(r.status == ExitCode::kOk);
  CHECK(r.table.rows().size() == 6 * c.sgd.n_list.size());
  for (std::size_t i = 0; i < r.table.rows().size(); ++i) {
    CHECK(std::get<std::string>(r.table.at(i, "risk_source")) == "oracle");
    CHECK(std::get<std::string>(r.table.at(i, "status")) == "ok");
  }

  const ExperimentConfig zero = parse_config_text(
      replace(replace(kSmallYaml, "noise_std: 0.5", "noise_std: 0.0"), "w0: zeros", "w0: ones"));
  const CommandResult z = cmd_bounds(zero);
  CHECK(z.status == ExitCode::kOk);
  for (std::size_t i = 0; i < z.table.rows().size(); ++i) {
    CHECK(as_double(z.table.at(i, "total")) == 0.0);
    CHECK(as_double(z.table.at(i, "risk")) == 0.0);
  }
}

TEST_CASE("sweep command") {
  const ExperimentConfig c = parse_config_text(kSmallYaml);
  const CommandResult r = cmd_sweep(c);
  CHECK(r.status == ExitCode::kOk);
  CHECK(r.table.rows().size() == 4);
  const Table& fit = extra(r, "sweep_fit");
  REQUIRE(fit.rows().size() == 1);
  CHECK(std::get<std::string>(fit.at(0, "case")) == "power_law");
  CHECK(std::get<std::string>(fit.at(0, "status")) == "ok");
  CHECK(std::get<std::int64_t>(fit.at(0, "points")) == 2);

  // The oracle column agrees with a direct evaluation.
  const RegressionModel m = c.model_for(160);
  CHECK(as_double(r.table.at(2, "risk")) == exact_risk(m, c.sgd_for(m, 160, true)).total);

  const ExperimentConfig zero = parse_config_text(
      replace(replace(kSmallYaml, "noise_std: 0.5", "noise_std: 0.0"), "w0: zeros", "w0: ones"));
  const CommandResult z = cmd_sweep(zero);
  CHECK(std::get<std::string>(extra(z, "sweep_fit").at(0, "status")) == "degenerate");

  CHECK_THROWS_AS(cmd_sweep(parse_config_text(replace(kSmallYaml, "[40, 80, 160, 320]", "[40, 80, 160]"))),
                  ConfigError);
  CHECK_THROWS_AS(cmd_sweep(parse_config_text(replace(kSmallYaml, "[40, 80, 160, 320]", "[40, 60, 80, 160]"))),
                  ConfigError);
}

TEST_CASE("Monte Carlo sweeps are reproducible and thread-independent") {
  ExperimentConfig c = parse_config_text(kSmallYaml);
  c.run.oracle = OracleMode::kForceMonteCarlo;
  const std::string first = cmd_sweep(c).table.to_csv();
  CHECK(first == cmd_sweep(c).table.to_csv());
  c.run.threads = 3;
  CHECK(first == cmd_sweep(c).table.to_csv());
  c.run.seed = 18;
  CHECK(first != cmd_sweep(c).table.to_csv());
}

TEST_CASE("compare command") {
  const ExperimentConfig c = parse_config_text(kSmallYaml);
  const CommandResult r = cmd_compare(c);
  CHECK(r.status == ExitCode::kOk);
  // sgd, min_norm, two ridge rows and zero per N
  REQUIRE(r.table.rows().size() == 5 * c.sgd.n_list.size());
  for (std::size_t block = 0; block < c.sgd.n_list.size(); ++block) {
    const std::size_t base = 5 * block;
    CHECK(std::get<std::string>(r.table.at(base, "estimator")) == "sgd");
    CHECK(std::get<std::string>(r.table.at(base + 4, "estimator")) == "zero");
    const double zero = as_double(r.table.at(base + 4, "risk_mean"));
    const double heavy_ridge = as_double(r.table.at(base + 3, "risk_mean"));
    CHECK(heavy_ridge == doctest::Approx(zero).epsilon(1e-4));
    CHECK(std::get<std::int64_t>(r.table.at(base, "replicates")) == 40);
  }
  const RegressionModel m = c.model_for(40);
  CHECK(as_double(r.table.at(4, "risk_mean")) == doctest::Approx(0.5 * m.spectrum().trace()));
}

TEST_CASE("verify command") {
  const ExperimentConfig c = parse_config_text(kSmallYaml);
  const CommandResult r = cmd_verify(c);
  CHECK(r.status == ExitCode::kOk);
  bool saw_claim = false;
  for (std::size_t i = 0; i < r.table.rows().size(); ++i) {
    const auto& check = std::get<std::string>(r.table.at(i, "check"));
    const bool binding = std::get<bool>(r.table.at(i, "binding"));
    if (binding) CHECK_MESSAGE(std::get<bool>(r.table.at(i, "passed")), check);
    if (check == "moment_beta_claim_2") {
      saw_claim = true;
      CHECK_FALSE(std::get<bool>(r.table.at(i, "passed")));
    }
  }
  CHECK(saw_claim);

  ExperimentConfig strict = c;
  strict.run.strict_beta_claim = true;
  CHECK(cmd_verify(strict).status == ExitCode::kInvariantFailure);

  ExperimentConfig hot = c;
  hot.sgd.gamma = GammaSpec{GammaSpec::Rule::kExplicit, 5.0};
  const ExitCode status = cmd_verify(hot).status;
  CHECK((status == ExitCode::kInvariantFailure || status == ExitCode::kDivergence));
}

TEST_CASE("overrides and dispatch") {
  ExperimentConfig c = parse_config_text(kSmallYaml);
  CommandOverrides o;
  o.seed = 99;
  o.replicates = 5;
  o.oracle = OracleMode::kForceMonteCarlo;
  o.out_dir = "elsewhere";
  apply_overrides(c, o);
  CHECK(c.run.seed == 99);
  CHECK(c.run.replicates == 5);
  CHECK(c.run.oracle == OracleMode::kForceMonteCarlo);
  CHECK(c.out_dir == "elsewhere");
  CHECK_THROWS_AS(run_command("plot", c), std::invalid_argument);

  const auto dir = std::filesystem::temp_directory_path() / "sgdlab_write_test";
  std::filesystem::remove_all(dir);
  const CommandResult r = run_command("sweep", c);
  r.write(dir);
  CHECK(std::filesystem::exists(dir / "sweep.csv"));
  CHECK(std::filesystem::exists(dir / "sweep.json"));
  CHECK(std::filesystem::exists(dir / "sweep_fit.csv"));
  std::filesystem::remove_all(dir);
}
