#include "sgdlab/operator_calculus.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace sgdlab {

namespace {

void require_square(const Spectrum& spec, const Matrix& a, const char* what) {
  if (static_cast<std::size_t>(a.rows()) != spec.dim() ||
      static_cast<std::size_t>(a.cols()) != spec.dim()) {
    throw std::invalid_argument(std::string(what) + ": dimension mismatch");
  }
  require_symmetric(a, what);
}

void symmetrize(Matrix& a) { a = 0.5 * (a + a.transpose()).eval(); }

// Normalized margin of lower <= upper.
double order_margin(const Matrix& lower, const Matrix& upper) {
  const double scale = std::max(max_abs_entry(lower), max_abs_entry(upper));
  return psd_margin(upper - lower, scale);
}

void require_contracting(const Spectrum& spec, double gamma, double alpha, const char* what) {
  if (!(gamma * alpha * spec.trace() < 1.0)) {
    throw std::invalid_argument(std::string(what) + ": requires gamma < 1/(alpha tr H)");
  }
}

void record(OrderCheck& check, std::size_t step, double margin) {
  check.margins.push_back(margin);
  if (check.margins.size() == 1 || margin < check.worst) {
    check.worst = margin;
    check.worst_step = step;
  }
}

// Source term added per step of the chain.
Matrix chain_source(ChainKind kind, const RegressionModel& model,
                    const SgdConfig& cfg) {
  const auto d = static_cast<Eigen::Index>(model.dim());
  switch (kind) {
    case ChainKind::kBias:
      return Matrix::Zero(d, d);
    case ChainKind::kVariance: {
      Matrix sigma = Matrix::Zero(d, d);
      sigma.diagonal() = cfg.gamma * cfg.gamma * model.noise_covariance_diag();
      return sigma;
    }
    case ChainKind::kPartialSum: {
      const Vector beta0 = cfg.w0 - model.w_star();
      return beta0 * beta0.transpose();
    }
  }
  return Matrix::Zero(d, d);
}

}  // namespace

CovarianceState CovarianceState::initial(ChainKind kind, const RegressionModel& model,
                                         const SgdConfig& cfg) {
  cfg.validate(model.dim());
  const auto d = static_cast<Eigen::Index>(model.dim());
  CovarianceState state;
  state.kind = kind;
  if (kind == ChainKind::kVariance) {
    state.matrix = Matrix::Zero(d, d);
  } else {
    const Vector beta0 = cfg.w0 - model.w_star();
    state.matrix = beta0 * beta0.transpose();
  }
  return state;
}

Matrix apply_contraction(const Spectrum& spec, double gamma, const Matrix& a) {
  if (!(gamma > 0.0)) throw std::invalid_argument("apply_contraction: gamma must be > 0");
  require_square(spec, a, "apply_contraction");
  const auto& l = spec.values();
  Matrix out = a - gamma * (l.asDiagonal() * a + a * l.asDiagonal());
  out += (gamma * gamma) * fourth_moment_apply(spec, a);
  symmetrize(out);
  return out;
}

Matrix apply_deterministic_contraction(const Spectrum& spec, double gamma, const Matrix& a) {
  require_square(spec, a, "apply_deterministic_contraction");
  const Vector q = Vector::Ones(spec.values().size()) - gamma * spec.values();
  return q.asDiagonal() * a * q.asDiagonal();
}

namespace {

void require_chain_model(ChainKind kind, const RegressionModel& model) {
  if (kind == ChainKind::kVariance && !model.well_specified()) {
    throw std::invalid_argument("evolve: variance chain requires a well-specified model");
  }
}

void step_chain(CovarianceState& state, const Spectrum& spec, double gamma,
                const Matrix& source) {
  state.matrix = apply_contraction(spec, gamma, state.matrix) + source;
  ++state.step;
  if (!state.matrix.allFinite()) {
    throw DivergenceError("evolve: non-finite second moment", state.step);
  }
}

void require_psd(const CovarianceState& state) {
  if (psd_margin(state.matrix) < -kPsdTolerance) {
    throw InvariantError("evolve: second-moment matrix lost positive semidefiniteness at step " +
                         std::to_string(state.step));
  }
}

}  // namespace

CovarianceState evolve(CovarianceState state, const RegressionModel& model,
                       const SgdConfig& cfg, std::size_t steps) {
  cfg.validate(model.dim());
  require_chain_model(state.kind, model);
  const Matrix source = chain_source(state.kind, model, cfg);
  for (std::size_t i = 0; i < steps; ++i) {
    step_chain(state, model.spectrum(), cfg.gamma, source);
  }
  require_psd(state);
  return state;
}

CovarianceState steady_state(ChainKind kind, const RegressionModel& model,
                             const SgdConfig& cfg, std::size_t max_steps) {
  require_chain_model(kind, model);
  CovarianceState state = CovarianceState::initial(kind, model, cfg);
  const Matrix source = chain_source(kind, model, cfg);
  double previous = state.matrix.trace();
  for (std::size_t i = 0; i < max_steps; ++i) {
    step_chain(state, model.spectrum(), cfg.gamma, source);
    const double current = state.matrix.trace();
    if (std::abs(current - previous) <= 1e-12 * std::abs(current)) break;
    previous = current;
  }
  require_psd(state);
  return state;
}

ExactRisk exact_risk(const RegressionModel& model, const SgdConfig& cfg, MomentOperator op) {
  cfg.validate(model.dim());
  if (!model.well_specified()) {
    throw std::invalid_argument("exact_risk: requires a well-specified model");
  }
  const Vector& l = model.spectrum().values();
  const Eigen::Index d = l.size();
  const double gamma = cfg.gamma;
  const double g2 = gamma * gamma;
  const Vector q = Vector::Ones(d) - gamma * l;
  const Vector source = g2 * model.noise_covariance_diag();
  const bool gaussian = op == MomentOperator::kGaussian;

  // Diagonal of the Gaussian map: a_i (1 - 2 g l_i + 2 g^2 l_i^2) + g^2 l_i tr(H a);
  // the deterministic map keeps only a_i (1 - g l_i)^2.
  const Vector self = gaussian ? Vector(Vector::Ones(d) - 2.0 * gamma * l + 2.0 * g2 * l.cwiseAbs2())
                               : Vector(q.cwiseAbs2());
  const std::size_t last = cfg.horizon() - 1;
  const std::size_t window = cfg.n_samples;
  const Vector beta0 = cfg.w0 - model.w_star();

  // Pass 1: the only cross-coordinate coupling is tr(H a_t), so record it per
  // step for each chain.
  std::vector<double> tr_bias(last, 0.0), tr_var(last, 0.0), tr_total(last, 0.0);
  if (gaussian) {
    Vector bias = beta0.cwiseAbs2();
    Vector var = Vector::Zero(d);
    Vector total = bias;
    for (std::size_t t = 0; t < last; ++t) {
      tr_bias[t] = l.dot(bias);
      tr_var[t] = l.dot(var);
      tr_total[t] = l.dot(total);
      if (!std::isfinite(tr_total[t]) || !std::isfinite(tr_bias[t])) {
        throw DivergenceError("exact_risk: non-finite second moment", t);
      }
      bias = self.cwiseProduct(bias) + (g2 * tr_bias[t]) * l;
      var = self.cwiseProduct(var) + (g2 * tr_var[t]) * l + source;
      total = self.cwiseProduct(total) + (g2 * tr_total[t]) * l + source;
    }
  }

  // Pass 2: coordinates decouple given the traces. The weight of step t is
  // l_i (1 + 2 sum_{j=1}^{m} q_i^j) with m = s+N-1-t, tabulated by m.
  CompensatedSum bias_acc, var_acc, total_acc;
  std::vector<double> tail(window);
  for (Eigen::Index i = 0; i < d; ++i) {
    double power = 1.0;
    double partial = 0.0;
    tail[0] = l[i];
    for (std::size_t m = 1; m < window; ++m) {
      power *= q[i];
      partial += power;
      tail[m] = l[i] * (1.0 + 2.0 * partial);
    }
    double b = beta0[i] * beta0[i];
    double v = 0.0;
    double tot = b;
    CompensatedSum bi, vi, ti;
    const double coupling = gaussian ? g2 * l[i] : 0.0;
    for (std::size_t t = 0;; ++t) {
      if (t >= cfg.tail_start) {
        const double w = tail[last - t];
        bi += w * b;
        vi += w * v;
        ti += w * tot;
      }
      if (t == last) break;
      b = self[i] * b + coupling * tr_bias[t];
      v = self[i] * v + coupling * tr_var[t] + source[i];
      tot = self[i] * tot + coupling * tr_total[t] + source[i];
    }
    bias_acc += bi.value();
    var_acc += vi.value();
    total_acc += ti.value();
  }

  const double n = static_cast<double>(cfg.n_samples);
  const double norm = 1.0 / (2.0 * n * n);
  ExactRisk out{norm * total_acc.value(), norm * bias_acc.value(), norm * var_acc.value()};
  if (!std::isfinite(out.total) || !std::isfinite(out.bias) || !std::isfinite(out.variance)) {
    throw DivergenceError("exact_risk: non-finite accumulation", last);
  }
  return out;
}

bool OrderReport::passed() const noexcept {
  return std::all_of(checks.begin(), checks.end(),
                     [](const OrderCheck& c) { return !c.binding || c.passed(); });
}

const OrderCheck* OrderReport::find(const std::string& name) const {
  const auto it = std::find_if(checks.begin(), checks.end(),
                               [&](const OrderCheck& c) { return c.name == name; });
  return it == checks.end() ? nullptr : &*it;
}

OrderReport check_variance_chain_order(const RegressionModel& model,
                                       const SgdConfig& cfg, double alpha) {
  cfg.validate(model.dim());
  if (!model.well_specified()) {
    throw std::invalid_argument("check_variance_chain_order: requires a well-specified model");
  }
  const Spectrum& spec = model.spectrum();
  require_contracting(spec, cfg.gamma, alpha, "check_variance_chain_order");
  const Vector& l = spec.values();
  const Eigen::Index d = l.size();
  const double gamma = cfg.gamma;
  const double sigma_sq = model.noise_level();
  const double level = gamma * sigma_sq / (1.0 - gamma * alpha * spec.trace());
  const Vector q = Vector::Ones(d) - gamma * l;

  OrderCheck monotone{"monotone", true, {}, 0.0, 0};
  OrderCheck crude{"crude_upper", true, {}, 0.0, 0};
  OrderCheck refined{"refined_upper_t", true, {}, 0.0, 0};
  OrderCheck refined_2t{"refined_upper_2t", false, {}, 0.0, 0};
  OrderCheck lower{"lower_2t", true, {}, 0.0, 0};

  const Matrix crude_bound = level * Matrix::Identity(d, d);
  CovarianceState state = CovarianceState::initial(ChainKind::kVariance, model, cfg);
  Matrix previous = state.matrix;
  Vector q_t = Vector::Ones(d);   // (1 - g l)^t
  for (std::size_t t = 0; t <= cfg.n_samples; ++t) {
    if (t > 0) {
      state = evolve(std::move(state), model, cfg, 1);
      q_t = q_t.cwiseProduct(q);
      record(monotone, t, order_margin(previous, state.matrix));
    }
    const Vector q_2t = q_t.cwiseAbs2();
    const Matrix refined_bound = (level * (Vector::Ones(d) - q_t)).asDiagonal();
    const Matrix refined_2t_bound = (level * (Vector::Ones(d) - q_2t)).asDiagonal();
    const Matrix lower_bound = (0.5 * gamma * sigma_sq * (Vector::Ones(d) - q_2t)).asDiagonal();
    record(crude, t, order_margin(state.matrix, crude_bound));
    record(refined, t, order_margin(state.matrix, refined_bound));
    record(refined_2t, t, order_margin(state.matrix, refined_2t_bound));
    record(lower, t, order_margin(lower_bound, state.matrix));
    previous = state.matrix;
  }

  OrderCheck limit{"limit_crude_upper", true, {}, 0.0, 0};
  const CovarianceState limit_state = steady_state(ChainKind::kVariance, model, cfg);
  record(limit, limit_state.step, order_margin(limit_state.matrix, crude_bound));

  OrderReport report;
  report.checks = {monotone, crude, refined, refined_2t, lower, limit};
  return report;
}

OrderReport check_partial_sum_order(const RegressionModel& model,
                                    const SgdConfig& cfg, double alpha) {
  cfg.validate(model.dim());
  const Spectrum& spec = model.spectrum();
  require_contracting(spec, cfg.gamma, alpha, "check_partial_sum_order");
  const Vector& l = spec.values();
  const Eigen::Index d = l.size();
  const double gamma = cfg.gamma;
  const Vector q = Vector::Ones(d) - gamma * l;
  const Vector beta0 = cfg.w0 - model.w_star();
  const Matrix b0 = beta0 * beta0.transpose();
  const double tr_b0 = b0.trace();
  const double level = gamma * alpha * tr_b0 / (1.0 - gamma * alpha * spec.trace());

  OrderCheck monotone{"monotone", true, {}, 0.0, 0};
  OrderCheck refined{"refined_upper", true, {}, 0.0, 0};

  CovarianceState state = CovarianceState::initial(ChainKind::kPartialSum, model, cfg);
  Matrix previous = state.matrix;
  Matrix contracted_sum = b0;           // sum_{k<=t} Q^k B_0 Q^k
  Vector diag_sum = l;                  // sum_{k<=t} q^{2k} l
  Vector q_k = Vector::Ones(d);
  for (std::size_t t = 0; t <= cfg.n_samples; ++t) {
    if (t > 0) {
      state = evolve(std::move(state), model, cfg, 1);
      record(monotone, t, order_margin(previous, state.matrix));
      q_k = q_k.cwiseProduct(q);
      contracted_sum += q_k.asDiagonal() * b0 * q_k.asDiagonal();
      diag_sum += q_k.cwiseAbs2().cwiseProduct(l);
    }
    Matrix bound = contracted_sum;
    bound.diagonal() += level * diag_sum;
    record(refined, t, order_margin(state.matrix, bound));
    previous = state.matrix;
  }

  OrderCheck limit{"limit_moment_bound", true, {}, 0.0, 0};
  const CovarianceState limit_state = steady_state(ChainKind::kPartialSum, model, cfg);
  const Matrix moment = fourth_moment_apply(spec, limit_state.matrix);
  const Matrix limit_bound =
      (alpha * tr_b0 / (gamma * (1.0 - gamma * alpha * spec.trace())) * l).asDiagonal();
  record(limit, limit_state.step, order_margin(moment, limit_bound));

  OrderReport report;
  report.checks = {monotone, refined, limit};
  return report;
}

}  // namespace sgdlab
