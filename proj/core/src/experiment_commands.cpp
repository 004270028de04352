#include "sgdlab/experiment_commands.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <stdexcept>
#include <tuple>

#include "sgdlab/baselines.hpp"
#include "sgdlab/operator_calculus.hpp"

namespace sgdlab {

namespace {

using Cell = Table::Cell;

constexpr double kOracleCostLimit = 1e11;
constexpr std::size_t kOracleMaxDim = 256;
constexpr std::size_t kOrderCheckMaxDim = 64;
constexpr std::size_t kPathwiseReplicates = 8;
constexpr double kDecompositionTolerance = 1e-10;
constexpr double kPathwiseTolerance = 1e-9;
constexpr double kMomentTolerance = 1e-8;
constexpr double kSandwichSigmas = 3.0;
constexpr std::size_t kSweepMinPoints = 4;
constexpr double kSweepMinSpan = 8.0;

const double kNaN = std::numeric_limits<double>::quiet_NaN();

Cell count_cell(std::size_t v) { return static_cast<std::int64_t>(v); }

Cell optional_cell(const std::optional<double>& v) {
  return v ? Cell{*v} : Cell{};
}

double slope_tolerance(RateCase which) {
  switch (which) {
    case RateCase::kPiecewise:
    case RateCase::kPowerLaw:
      return 0.15;
    case RateCase::kLogPoly:
    case RateCase::kExponential:
      return 0.2;
  }
  return 0.0;
}

std::string_view to_string(RateCase which) {
  switch (which) {
    case RateCase::kPiecewise: return "piecewise";
    case RateCase::kPowerLaw: return "power_law";
    case RateCase::kLogPoly: return "log_poly";
    case RateCase::kExponential: return "exponential";
  }
  return "unknown";
}

RiskSummary summarize(const std::vector<double>& samples) {
  RiskSummary out;
  std::vector<double> finite;
  finite.reserve(samples.size());
  for (double v : samples) {
    if (std::isfinite(v)) finite.push_back(v);
  }
  out.diverged = samples.size() - finite.size();
  const RiskEstimate est = RiskEstimate::from_samples(finite);
  out.mean = finite.empty() ? kNaN : est.mean;
  out.std_err = est.std_err;
  out.replicates = finite.size();
  if (!finite.empty()) {
    std::vector<double> sorted = finite;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t mid = sorted.size() / 2;
    out.median = sorted.size() % 2 == 1 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);
  } else {
    out.median = kNaN;
  }
  return out;
}

Rng sample_rng(std::uint64_t seed, std::size_t replicate) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(replicate), 0x9e3779b9u};
  return Rng(seq);
}

ExitCode worse(ExitCode a, ExitCode b) {
  auto rank = [](ExitCode c) {
    switch (c) {
      case ExitCode::kOk: return 0;
      case ExitCode::kInvariantFailure: return 1;
      case ExitCode::kDivergence: return 2;
      case ExitCode::kConfigError: return 3;
    }
    return 0;
  };
  return rank(a) >= rank(b) ? a : b;
}

}  // namespace

void apply_overrides(ExperimentConfig& config, const CommandOverrides& overrides) {
  if (overrides.out_dir) config.out_dir = *overrides.out_dir;
  if (overrides.seed) config.run.seed = *overrides.seed;
  if (overrides.oracle) config.run.oracle = *overrides.oracle;
  if (overrides.replicates) config.run.replicates = *overrides.replicates;
  if (overrides.threads) config.run.threads = *overrides.threads;
  if (overrides.strict_beta_claim) config.run.strict_beta_claim = *overrides.strict_beta_claim;
}

void CommandResult::write(const std::filesystem::path& out_dir) const {
  table.write(out_dir, command);
  for (const auto& [stem, extra] : extras) extra.write(out_dir, stem);
}

bool use_oracle(OracleMode mode, const RegressionModel& model, const SgdConfig& cfg) {
  if (!model.well_specified()) return false;
  switch (mode) {
    case OracleMode::kForceOracle: return true;
    case OracleMode::kForceMonteCarlo: return false;
    case OracleMode::kAuto: break;
  }
  const double cost = static_cast<double>(cfg.horizon()) * static_cast<double>(model.dim());
  return model.dim() <= kOracleMaxDim && cost <= kOracleCostLimit;
}

RiskPoint evaluate_risk(const RegressionModel& model, const SgdConfig& cfg, OracleMode mode,
                        std::size_t replicates, std::size_t threads) {
  RiskPoint out;
  try {
    if (use_oracle(mode, model, cfg)) {
      const ExactRisk exact = exact_risk(model, cfg);
      out.risk = exact.total;
      out.bias = exact.bias;
      out.variance = exact.variance;
      out.source = "oracle";
    } else {
      const RiskEstimate est = monte_carlo_risk(model, cfg, std::max<std::size_t>(replicates, 2),
                                                threads);
      out.risk = est.mean;
      out.std_err = est.std_err;
      out.source = "monte_carlo";
    }
  } catch (const DivergenceError&) {
    out.risk = kNaN;
    out.std_err = kNaN;
    out.bias.reset();
    out.variance.reset();
    out.diverged = true;
    if (out.source.empty()) {
      out.source = use_oracle(mode, model, cfg) ? "oracle" : "monte_carlo";
    }
  }
  return out;
}

SlopeFit fit_upper_half_slope(std::span<const double> n, std::span<const double> value) {
  if (n.size() != value.size()) throw std::invalid_argument("fit: size mismatch");
  std::vector<std::pair<double, double>> pts;
  for (std::size_t i = 0; i < n.size(); ++i) {
    if (n[i] > 0.0 && std::isfinite(value[i]) && value[i] > 0.0) {
      pts.emplace_back(std::log(n[i]), std::log(value[i]));
    }
  }
  std::sort(pts.begin(), pts.end());
  SlopeFit fit;
  const std::size_t keep = (pts.size() + 1) / 2;
  if (keep < 2) return fit;
  pts.erase(pts.begin(), pts.end() - static_cast<std::ptrdiff_t>(keep));
  double mx = 0.0, my = 0.0;
  for (const auto& [x, y] : pts) {
    mx += x;
    my += y;
  }
  mx /= static_cast<double>(keep);
  my /= static_cast<double>(keep);
  double sxx = 0.0, sxy = 0.0;
  for (const auto& [x, y] : pts) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
  }
  if (!(sxx > 0.0)) return fit;
  fit.points = keep;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.valid = true;
  return fit;
}

std::optional<std::pair<RateCase, RateCaseParams>> rate_case_for(const ExperimentConfig& config) {
  const SpectrumSpec& spec = config.model.spectrum;
  RateCaseParams params;
  params.r = spec.params.r;
  params.beta = spec.params.beta;
  switch (spec.family) {
    case SpectrumFamily::kPiecewise:
      if (!spec.head_exponent) return std::nullopt;
      params.r = *spec.head_exponent;
      switch (spec.dim.kind) {
        case DimensionRule::Kind::kFixed: params.dim_fixed = true; break;
        case DimensionRule::Kind::kPower: params.q = spec.dim.value; break;
        case DimensionRule::Kind::kPerSample: params.q = 1.0; break;
      }
      return std::pair{RateCase::kPiecewise, params};
    case SpectrumFamily::kPowerLaw: return std::pair{RateCase::kPowerLaw, params};
    case SpectrumFamily::kLogPoly: return std::pair{RateCase::kLogPoly, params};
    case SpectrumFamily::kExponential: return std::pair{RateCase::kExponential, params};
    case SpectrumFamily::kExplicit: return std::nullopt;
  }
  return std::nullopt;
}

EstimatorComparison compare_estimators(const RegressionModel& model, const SgdConfig& cfg,
                                       std::span<const double> ridge_lambdas,
                                       std::size_t replicates, std::size_t threads) {
  cfg.validate(model.dim());
  for (double l : ridge_lambdas) {
    if (!(l > 0.0)) throw std::invalid_argument("compare: ridge lambda must be > 0");
  }
  const std::size_t n = cfg.n_samples;
  std::vector<double> sgd(replicates), min_norm(replicates);
  std::vector<std::vector<double>> ridge(ridge_lambdas.size(), std::vector<double>(replicates));

  parallel_for(replicates, threads, [&](std::size_t r) {
    Rng stream_rng = replicate_rng(cfg.seed, r);
    try {
      sgd[r] = excess_risk(model, run_sgd(model, cfg, stream_rng));
    } catch (const DivergenceError&) {
      sgd[r] = kNaN;
    }
    Rng rng = sample_rng(cfg.seed, r);
    const DesignSample sample = draw_sample(model, n, rng);
    min_norm[r] = excess_risk(model, fit_min_norm(sample));
    for (std::size_t j = 0; j < ridge_lambdas.size(); ++j) {
      ridge[j][r] = excess_risk(model, fit_ridge(sample, ridge_lambdas[j]));
    }
  });

  EstimatorComparison out;
  out.sgd = summarize(sgd);
  out.min_norm = summarize(min_norm);
  for (const auto& samples : ridge) out.ridge.push_back(summarize(samples));
  out.zero_predictor = excess_risk(model, Vector::Zero(model.w_star().size()));
  return out;
}

const std::vector<std::string>& bounds_columns() {
  static const std::vector<std::string> cols{
      "n", "d", "kind", "gamma", "tail_start", "effective_bias", "effective_var", "total",
      "k_star", "k_dagger", "admissible", "reason", "risk", "risk_std_err", "risk_source",
      "sandwich", "status"};
  return cols;
}

const std::vector<std::string>& verify_columns() {
  static const std::vector<std::string> cols{"n",         "d",       "check",   "value",
                                             "threshold", "binding", "passed",  "detail"};
  return cols;
}

const std::vector<std::string>& sweep_columns() {
  static const std::vector<std::string> cols{
      "n", "d", "gamma", "tail_start", "risk", "risk_std_err", "bias", "variance",
      "risk_source", "predicted_order", "status"};
  return cols;
}

const std::vector<std::string>& sweep_fit_columns() {
  static const std::vector<std::string> cols{
      "case", "predicted_form", "predicted_slope", "points", "fitted_slope",
      "compensated_slope", "tolerance", "within_tolerance", "status"};
  return cols;
}

const std::vector<std::string>& compare_columns() {
  static const std::vector<std::string> cols{
      "n", "d", "estimator", "lambda", "risk_mean", "risk_std_err", "risk_median",
      "replicates", "diverged", "comparator_lower", "comparator_upper", "comparator_k"};
  return cols;
}

CommandResult cmd_bounds(const ExperimentConfig& config) {
  CommandResult result{"bounds", Table(bounds_columns()), {}, ExitCode::kOk, {}};
  const RunSpec& run = config.run;

  for (std::size_t n : config.sgd.n_list) {
    const RegressionModel model = config.model_for(n);
    const SgdConfig base = config.sgd_for(model, n, false);
    const SgdConfig tail = config.sgd_for(model, n, true);
    SgdConfig large = base;
    large.gamma = large_step_gamma(model.spectrum(), run.alpha);

    const std::vector<std::pair<BoundReport, const SgdConfig*>> reports{
        {upper_bound(model, base, run.alpha), &base},
        {lower_bound(model, base, run.beta), &base},
        {corollary_bound(model, base, BoundKind::kLargeStep, run.alpha), &large},
        {corollary_bound(model, base, BoundKind::kCrude, run.alpha), &large},
        {tail_upper_bound(model, tail, run.alpha), &tail},
        {tail_lower_bound(model, tail, run.beta), &tail},
    };

    // Reports share at most three distinct SGD settings.
    std::map<std::tuple<double, std::size_t>, RiskPoint> risks;
    auto risk_for = [&](const SgdConfig& cfg) -> const RiskPoint& {
      const auto key = std::make_tuple(cfg.gamma, cfg.tail_start);
      auto it = risks.find(key);
      if (it == risks.end()) {
        it = risks.emplace(key, evaluate_risk(model, cfg, run.oracle, run.replicates,
                                              config.threads()))
                 .first;
      }
      return it->second;
    };

    for (const auto& [report, cfg] : reports) {
      const RiskPoint& risk = risk_for(*cfg);
      const bool is_lower =
          report.kind == BoundKind::kLower || report.kind == BoundKind::kTailLower;
      Cell sandwich;
      std::string status = "ok";
      if (risk.diverged) {
        status = "diverged";
        result.status = worse(result.status, ExitCode::kDivergence);
        result.messages.push_back("bounds: N=" + std::to_string(n) + " " +
                                  std::string(to_string(report.kind)) + ": risk diverged");
      } else {
        const double slack = kSandwichSigmas * risk.std_err;
        const bool ok = is_lower ? report.total <= risk.risk + slack
                                 : risk.risk - slack <= report.total;
        sandwich = ok;
        if (!ok && report.admissible) {
          result.status = worse(result.status, ExitCode::kInvariantFailure);
          result.messages.push_back("bounds: N=" + std::to_string(n) + " " +
                                    std::string(to_string(report.kind)) +
                                    ": admissible bound violated");
        }
      }
      result.table.add_row({
          count_cell(n),
          count_cell(model.dim()),
          std::string(to_string(report.kind)),
          report.gamma,
          count_cell(report.tail_start),
          report.effective_bias,
          report.effective_var,
          report.total,
          count_cell(report.k_star),
          report.k_dagger ? count_cell(*report.k_dagger) : Cell{},
          report.admissible,
          report.reason,
          risk.risk,
          risk.std_err,
          risk.source,
          sandwich,
          status,
      });
    }
  }
  return result;
}

CommandResult cmd_verify(const ExperimentConfig& config) {
  CommandResult result{"verify", Table(verify_columns()), {}, ExitCode::kOk, {}};
  const RunSpec& run = config.run;
  Rng rng(run.seed);

  for (std::size_t n : config.sgd.n_list) {
    const RegressionModel model = config.model_for(n);
    const SgdConfig cfg = config.sgd_for(model, n, true);
    const std::size_t d = model.dim();
    const Spectrum& spec = model.spectrum();

    auto add = [&](const std::string& check, const Cell& value, const Cell& threshold,
                   bool binding, bool passed, const std::string& detail) {
      result.table.add_row({count_cell(n), count_cell(d), check, value, threshold, binding,
                            passed, detail});
      if (binding && !passed) {
        result.status = worse(result.status, ExitCode::kInvariantFailure);
        result.messages.push_back("verify: N=" + std::to_string(n) + " " + check + " failed" +
                                  (detail.empty() ? "" : " (" + detail + ")"));
      }
    };
    auto diverged = [&](const std::string& check, const DivergenceError& e) {
      result.table.add_row({count_cell(n), count_cell(d), check, Cell{}, Cell{}, true, false,
                            std::string(e.what()) + " at step " + std::to_string(e.step())});
      result.status = worse(result.status, ExitCode::kDivergence);
      result.messages.push_back("verify: N=" + std::to_string(n) + " " + check + " diverged");
    };
    auto skipped = [&](const std::string& check, const std::string& why) {
      add(check, Cell{}, Cell{}, false, true, "skipped: " + why);
    };

    const double stability = cfg.gamma * run.alpha * spec.trace();
    add("stepsize_admissible", stability, 1.0, true, stability <= 1.0,
        stability <= 1.0 ? "" : "gamma exceeds 1/(alpha tr H)");
    add("stepsize_below_inverse_top_eigenvalue", cfg.gamma * spec.largest(), 1.0, true,
        cfg.gamma * spec.largest() < 1.0, "");

    const MomentConstants moments = verify_moment_constants(model, run.moment_trials, rng);
    add("moment_alpha", moments.alpha, run.alpha, true,
        moments.alpha <= run.alpha + kMomentTolerance,
        std::to_string(moments.tested) + " test matrices");
    add("moment_beta", moments.beta, run.beta, true,
        moments.beta >= run.beta - kMomentTolerance,
        std::to_string(moments.tested) + " test matrices");
    add("moment_r_squared", moments.r_squared, spec.trace() + 2.0 * spec.largest(), false,
        std::abs(moments.r_squared - (spec.trace() + 2.0 * spec.largest())) <=
            1e-8 * moments.r_squared,
        "");

    const BetaClaimCheck claim = check_beta_claim(spec, 2.0);
    add("moment_beta_claim_2", claim.worst_margin, 0.0, run.strict_beta_claim, claim.holds,
        claim.holds ? "" : "fails on projector " + std::to_string(claim.worst_index + 1));

    if (d > kOrderCheckMaxDim) {
      skipped("psd_mapping", "d > " + std::to_string(kOrderCheckMaxDim));
    } else {
      double worst_gaussian = std::numeric_limits<double>::infinity();
      double worst_deterministic = worst_gaussian;
      const auto di = static_cast<Eigen::Index>(d);
      std::normal_distribution<double> normal;
      for (std::size_t trial = 0; trial < std::max<std::size_t>(run.moment_trials, 1); ++trial) {
        Matrix g(di, di);
        for (Eigen::Index j = 0; j < di; ++j) {
          for (Eigen::Index i = 0; i < di; ++i) g(i, j) = normal(rng);
        }
        const Matrix a = g * g.transpose();
        const Matrix out = apply_contraction(spec, cfg.gamma, a);
        const Matrix det = apply_deterministic_contraction(spec, cfg.gamma, a);
        worst_gaussian = std::min(worst_gaussian, psd_margin(out, max_abs_entry(a)));
        worst_deterministic = std::min(worst_deterministic, psd_margin(det, max_abs_entry(a)));
      }
      add("psd_mapping_gaussian", worst_gaussian, -kPsdTolerance, true,
          worst_gaussian >= -kPsdTolerance, "");
      add("psd_mapping_deterministic", worst_deterministic, -kPsdTolerance, true,
          worst_deterministic >= -kPsdTolerance, "");
    }

    if (!model.well_specified()) {
      skipped("order_chains", "mis-specified noise");
      skipped("decomposition_exact", "mis-specified noise");
      skipped("decomposition_pathwise", "mis-specified noise");
      continue;
    }

    if (d > kOrderCheckMaxDim) {
      skipped("order_chains", "d > " + std::to_string(kOrderCheckMaxDim));
    } else if (!(stability < 1.0)) {
      skipped("order_chains", "gamma >= 1/(alpha tr H)");
    } else {
      SgdConfig capped = cfg;
      capped.n_samples = std::min(cfg.n_samples, run.order_steps);
      for (const auto& [prefix, check] :
           {std::pair{std::string("variance."), &check_variance_chain_order},
            std::pair{std::string("partial_sum."), &check_partial_sum_order}}) {
        try {
          const OrderReport report = check(model, capped, run.alpha);
          for (const OrderCheck& c : report.checks) {
            add(prefix + c.name, c.worst, -kPsdTolerance, c.binding, c.passed(),
                "worst at t=" + std::to_string(c.worst_step));
          }
        } catch (const DivergenceError& e) {
          diverged(prefix + "chain", e);
        } catch (const InvariantError& e) {
          add(prefix + "chain", Cell{}, Cell{}, true, false, e.what());
        }
      }
    }

    if (use_oracle(run.oracle, model, cfg)) {
      try {
        const ExactRisk exact = exact_risk(model, cfg);
        const double gap = std::abs(exact.total - (exact.bias + exact.variance));
        const double rel = exact.total > 0.0 ? gap / exact.total : gap;
        add("decomposition_exact", rel, kDecompositionTolerance, true,
            rel <= kDecompositionTolerance, "");
      } catch (const DivergenceError& e) {
        diverged("decomposition_exact", e);
      }
    } else {
      skipped("decomposition_exact", "oracle disabled");
    }

    try {
      double worst = 0.0;
      for (std::size_t r = 0; r < kPathwiseReplicates; ++r) {
        Rng path_rng = replicate_rng(run.seed, r);
        const CoupledAverages avg = run_coupled(model, cfg, path_rng);
        const Vector full = avg.full - model.w_star();
        const double scale = std::max({full.norm(), avg.bias.norm(), avg.variance.norm(), 1e-300});
        worst = std::max(worst, (full - avg.bias - avg.variance).norm() / scale);
      }
      add("decomposition_pathwise", worst, kPathwiseTolerance, true, worst <= kPathwiseTolerance,
          std::to_string(kPathwiseReplicates) + " coupled paths");
    } catch (const DivergenceError& e) {
      diverged("decomposition_pathwise", e);
    }
  }
  return result;
}

CommandResult cmd_sweep(const ExperimentConfig& config) {
  const auto& ns = config.sgd.n_list;
  if (ns.size() < kSweepMinPoints) {
    throw ConfigError("sgd.n: sweep needs at least " + std::to_string(kSweepMinPoints) +
                      " sample sizes");
  }
  if (static_cast<double>(ns.back()) < kSweepMinSpan * static_cast<double>(ns.front())) {
    throw ConfigError("sgd.n: sweep grid must span at least 3 octaves");
  }
  CommandResult result{"sweep", Table(sweep_columns()), {}, ExitCode::kOk, {}};
  const auto rate = rate_case_for(config);

  struct Point {
    std::size_t d = 0;
    SgdConfig cfg;
    RiskPoint risk;
    std::optional<RatePrediction> predicted;
  };
  std::vector<Point> points(ns.size());
  const std::size_t threads = config.threads();
  const std::size_t outer = std::min(threads, ns.size());
  const std::size_t inner = std::max<std::size_t>(1, threads / std::max<std::size_t>(outer, 1));
  parallel_for(ns.size(), outer, [&](std::size_t i) {
    const RegressionModel model = config.model_for(ns[i]);
    Point& p = points[i];
    p.d = model.dim();
    p.cfg = config.sgd_for(model, ns[i], true);
    p.risk = evaluate_risk(model, p.cfg, config.run.oracle, config.run.replicates, inner);
    if (rate) {
      p.predicted = rate_prediction(rate->first, rate->second, static_cast<double>(ns[i]));
    }
  });

  std::vector<double> xs, risks, ratios;
  bool all_zero = true;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    const Point& p = points[i];
    if (p.risk.diverged) {
      result.status = worse(result.status, ExitCode::kDivergence);
      result.messages.push_back("sweep: N=" + std::to_string(ns[i]) + " diverged");
    } else if (p.risk.risk != 0.0) {
      all_zero = false;
    }
    result.table.add_row({count_cell(ns[i]), count_cell(p.d), p.cfg.gamma,
                          count_cell(p.cfg.tail_start), p.risk.risk, p.risk.std_err,
                          optional_cell(p.risk.bias), optional_cell(p.risk.variance),
                          p.risk.source,
                          p.predicted ? Cell{p.predicted->value} : Cell{},
                          std::string(p.risk.diverged ? "diverged" : "ok")});
    xs.push_back(static_cast<double>(ns[i]));
    risks.push_back(p.risk.diverged ? kNaN : p.risk.risk);
    ratios.push_back(p.risk.diverged || !p.predicted ? kNaN : p.risk.risk / p.predicted->value);
  }

  Table fit_table(sweep_fit_columns());
  const std::string case_name = rate ? std::string(to_string(rate->first)) : "none";
  const RatePrediction* last = points.back().predicted ? &*points.back().predicted : nullptr;
  const Cell form = last ? Cell{last->form} : Cell{};
  const Cell predicted_slope = last && last->exponent ? Cell{*last->exponent} : Cell{};
  if (all_zero) {
    fit_table.add_row({case_name, form, predicted_slope, count_cell(0), Cell{}, Cell{}, Cell{},
                       Cell{}, std::string("degenerate")});
  } else {
    const SlopeFit fit = fit_upper_half_slope(xs, risks);
    const SlopeFit comp = rate ? fit_upper_half_slope(xs, ratios) : SlopeFit{};
    const double tol = rate ? slope_tolerance(rate->first) : 0.0;
    std::string status = "ok";
    if (!fit.valid) status = "insufficient";
    else if (!rate) status = "no_prediction";
    fit_table.add_row({case_name, form, predicted_slope, count_cell(fit.points),
                       fit.valid ? Cell{fit.slope} : Cell{},
                       comp.valid ? Cell{comp.slope} : Cell{},
                       rate ? Cell{tol} : Cell{},
                       comp.valid ? Cell{std::abs(comp.slope) <= tol} : Cell{}, status});
  }
  result.extras.emplace_back("sweep_fit", std::move(fit_table));
  return result;
}

CommandResult cmd_compare(const ExperimentConfig& config) {
  CommandResult result{"compare", Table(compare_columns()), {}, ExitCode::kOk, {}};
  const RunSpec& run = config.run;
  const std::size_t replicates = std::max<std::size_t>(run.replicates, 2);

  for (std::size_t n : config.sgd.n_list) {
    const RegressionModel model = config.model_for(n);
    const SgdConfig cfg = config.sgd_for(model, n, false);
    const double sigma_sq = model.noise_level();
    const EstimatorComparison cmp =
        compare_estimators(model, cfg, run.ridge_lambdas, replicates, config.threads());

    auto add = [&](const std::string& name, const Cell& lambda, const RiskSummary& s,
                   const Cell& lower, const Cell& upper, const Cell& k) {
      result.table.add_row({count_cell(n), count_cell(model.dim()), name, lambda, s.mean,
                            s.std_err, s.median, count_cell(s.replicates), count_cell(s.diverged),
                            lower, upper, k});
    };

    const BoundReport sgd_upper = upper_bound(model, cfg, run.alpha);
    const BoundReport sgd_lower = lower_bound(model, cfg, run.beta);
    add("sgd", Cell{}, cmp.sgd, sgd_lower.total, sgd_upper.total, count_cell(sgd_upper.k_star));
    if (cmp.sgd.diverged > 0) {
      result.status = worse(result.status, ExitCode::kDivergence);
      result.messages.push_back("compare: N=" + std::to_string(n) + " " +
                                std::to_string(cmp.sgd.diverged) + " SGD replicates diverged");
    }

    const auto ols = ols_lower_bound(model.spectrum(), n, sigma_sq, run.ols_b, run.ols_c);
    add("min_norm", Cell{}, cmp.min_norm, ols ? Cell{ols->value} : Cell{}, Cell{},
        ols ? count_cell(ols->k_star) : Cell{});

    for (std::size_t j = 0; j < run.ridge_lambdas.size(); ++j) {
      const double lambda = run.ridge_lambdas[j];
      const RidgeComparator rc =
          ridge_bounds(model.spectrum(), n, sigma_sq, lambda, model.w_star(), run.ridge);
      add("ridge", lambda, cmp.ridge[j], rc.lower, rc.upper, count_cell(rc.k_star));
    }

    RiskSummary zero;
    zero.mean = cmp.zero_predictor;
    zero.median = cmp.zero_predictor;
    zero.replicates = 1;
    add("zero", Cell{}, zero, cmp.zero_predictor, cmp.zero_predictor, Cell{});
  }
  return result;
}

CommandResult run_command(std::string_view name, const ExperimentConfig& config) {
  if (name == "bounds") return cmd_bounds(config);
  if (name == "verify") return cmd_verify(config);
  if (name == "sweep") return cmd_sweep(config);
  if (name == "compare") return cmd_compare(config);
  throw std::invalid_argument("unknown command '" + std::string(name) + "'");
}

}  // namespace sgdlab
